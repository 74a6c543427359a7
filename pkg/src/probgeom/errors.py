"""Exceptions shared across the package."""


class InvariantViolation(Exception):
    """A mathematical invariant failed beyond its certified tolerance."""


class SolverError(Exception):
    """The exact transport solver failed to certify an optimum."""
