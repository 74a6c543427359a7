"""Primal network simplex for dense and sparse-arc transportation problems.

Nodes 0..n-1 are sources, n..n+m-1 targets, n+m an artificial root.  The
basis tree lives in parent pointers plus doubly linked child lists; each
node stores the flow and cost of the arc to its parent.  Pivots touch only
the re-hung subtree, a sorted candidate queue amortizes entering-arc scans,
leaving-arc ties follow Cunningham's rule (last blocking arc along the
cycle orientation) to curb degenerate cycling, and a final pass recomputes
potentials and flows exactly from the tree so the returned certificate is
drift-free.
"""

import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numpy as np
from numba import njit, prange

OPTIMAL = 0
ITERATION_LIMIT = 1
INFEASIBLE = 2
BAD_BASIS = 3

DENSE = 0
SPARSE = 1

SCAN_EUCLID_POW = 0
SCAN_L1_POW = 1


@njit(cache=True)
def _detach(v, par, first_child, next_sib, prev_sib):
    w = prev_sib[v]
    x = next_sib[v]
    if w != -1:
        next_sib[w] = x
    else:
        first_child[par[v]] = x
    if x != -1:
        prev_sib[x] = w


@njit(cache=True)
def _attach(v, p, par, first_child, next_sib, prev_sib):
    old = first_child[p]
    next_sib[v] = old
    if old != -1:
        prev_sib[old] = v
    prev_sib[v] = -1
    first_child[p] = v
    par[v] = p


@njit(cache=True)
def _points_up(w, p, n):
    """True if the tree arc between w and its parent p is directed w -> p."""
    if w < n:
        return True          # source -> (target or root)
    if p < n:
        return False         # source -> target, seen from the target side
    return False             # root -> target, stored at the target node


@njit(cache=True)
def _subtree_refresh(x_in, par, first_child, next_sib, depth, pi, delta, stack):
    """Shift pi by delta and fix depth on the subtree rooted at x_in."""
    top = 0
    stack[top] = x_in
    top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        p = par[v]
        depth[v] = depth[p] + 1
        pi[v] += delta
        c = first_child[v]
        while c != -1:
            stack[top] = c
            top += 1
            c = next_sib[c]


@njit(cache=True)
def _refresh_exact(n, m, a, b, par, first_child, next_sib, depth, pi, flow,
                   pred_cost, stack, order, sub):
    """Exact potentials and flows from the tree; returns (art_max, min_flow)."""
    root = n + m
    V = n + m + 1
    top = 0
    stack[top] = root
    top += 1
    k = 0
    while top > 0:
        top -= 1
        v = stack[top]
        order[k] = v
        k += 1
        if v != root:
            p = par[v]
            depth[v] = depth[p] + 1
            c = pred_cost[v]
            if _points_up(v, p, n):
                pi[v] = c + pi[p]
            else:
                pi[v] = pi[p] - c
        else:
            depth[v] = 0
            pi[v] = 0.0
        c2 = first_child[v]
        while c2 != -1:
            stack[top] = c2
            top += 1
            c2 = next_sib[c2]
    for v in range(V):
        if v < n:
            sub[v] = a[v]
        elif v < root:
            sub[v] = -b[v - n]
        else:
            sub[v] = 0.0
    art_max = 0.0
    min_flow = 0.0
    for idx in range(k - 1, 0, -1):
        v = order[idx]
        p = par[v]
        s = sub[v]
        if _points_up(v, p, n):
            flow[v] = s
        else:
            flow[v] = -s
        if flow[v] < min_flow:
            min_flow = flow[v]
        if p == root:
            if abs(flow[v]) > art_max:
                art_max = abs(flow[v])
        sub[p] += s
    return art_max, min_flow


@njit(cache=True)
def _init_star(n, m, a, b, art_cost, par, first_child, next_sib, prev_sib,
               depth, pi, flow, pred_cost):
    root = n + m
    for v in range(root):
        _attach(v, root, par, first_child, next_sib, prev_sib)
        depth[v] = 1
        pred_cost[v] = art_cost
        if v < n:
            pi[v] = art_cost
            flow[v] = a[v]
        else:
            pi[v] = -art_cost
            flow[v] = b[v - n]
    par[root] = -1
    pi[root] = 0.0
    depth[root] = 0


@njit(cache=True)
def _init_from_arcs(n, m, bi, bj, bc, art_cost, par, first_child, next_sib,
                    prev_sib, depth, pi, flow, pred_cost, stack):
    """Build the tree from a basis arc list, linking components to the root.

    Arcs forming cycles are silently dropped; they just start non-basic.
    """
    root = n + m
    V = n + m + 1
    E = bi.shape[0]
    deg = np.zeros(V, np.int64)
    for e in range(E):
        deg[bi[e]] += 1
        deg[n + bj[e]] += 1
    ptr = np.zeros(V + 1, np.int64)
    for v in range(V):
        ptr[v + 1] = ptr[v] + deg[v]
    adj_node = np.empty(2 * E, np.int64)
    adj_cost = np.empty(2 * E, np.float64)
    fill = ptr[:V].copy()
    for e in range(E):
        u = bi[e]
        w = n + bj[e]
        adj_node[fill[u]] = w
        adj_cost[fill[u]] = bc[e]
        fill[u] += 1
        adj_node[fill[w]] = u
        adj_cost[fill[w]] = bc[e]
        fill[w] += 1

    par[root] = -1
    first_child[root] = -1
    pi[root] = 0.0
    depth[root] = 0
    visited = np.zeros(V, np.uint8)
    visited[root] = 1
    for seed in range(root):
        if visited[seed]:
            continue
        _attach(seed, root, par, first_child, next_sib, prev_sib)
        pred_cost[seed] = art_cost
        visited[seed] = 1
        top = 0
        stack[top] = seed
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for q in range(ptr[v], ptr[v + 1]):
                w = adj_node[q]
                if visited[w]:
                    continue
                visited[w] = 1
                _attach(w, v, par, first_child, next_sib, prev_sib)
                pred_cost[w] = adj_cost[q]
                stack[top] = w
                top += 1


@njit(cache=True)
def _simplex_core(a, b, mode, C, arc_i, arc_j, arc_c, basis_i, basis_j,
                  basis_c, max_iter, refresh_every):
    """Shared driver; see ``solve_dense`` and ``solve_arcs``.

    Returns (status, basic_i, basic_j, basic_flow, f, g, n_pivots) where the
    basic arrays list every real arc of the final basis (flows may be 0) and
    f, g are the node potentials of sources and targets.
    """
    n = a.shape[0]
    m = b.shape[0]
    V = n + m + 1
    root = n + m
    if mode == DENSE:
        n_arcs = n * m
    else:
        n_arcs = arc_i.shape[0]

    par = np.full(V, -1, np.int64)
    first_child = np.full(V, -1, np.int64)
    next_sib = np.full(V, -1, np.int64)
    prev_sib = np.full(V, -1, np.int64)
    depth = np.zeros(V, np.int64)
    pi = np.zeros(V, np.float64)
    flow = np.zeros(V, np.float64)
    pred_cost = np.zeros(V, np.float64)
    stack = np.empty(V, np.int64)
    order = np.empty(V, np.int64)
    sub = np.empty(V, np.float64)

    cmax = 0.0
    if mode == DENSE:
        for i in range(n):
            for j in range(m):
                if C[i, j] > cmax:
                    cmax = C[i, j]
    else:
        for e in range(n_arcs):
            if arc_c[e] > cmax:
                cmax = arc_c[e]
    art_cost = 1.0 + 2.0 * cmax
    tol = 1e-12 * (1.0 + cmax)

    if basis_i.shape[0] > 0:
        _init_from_arcs(n, m, basis_i, basis_j, basis_c, art_cost, par,
                        first_child, next_sib, prev_sib, depth, pi, flow,
                        pred_cost, stack)
        art_max, min_flow = _refresh_exact(n, m, a, b, par, first_child,
                                           next_sib, depth, pi, flow,
                                           pred_cost, stack, order, sub)
        if min_flow < -1e-12:
            # warm basis infeasible for these marginals; caller retries cold
            return (BAD_BASIS, np.empty(0, np.int64), np.empty(0, np.int64),
                    np.empty(0, np.float64), pi[:n].copy(), pi[n:root].copy(), 0)
        for v in range(root):
            if flow[v] < 0.0:
                flow[v] = 0.0
    else:
        _init_star(n, m, a, b, art_cost, par, first_child, next_sib,
                   prev_sib, depth, pi, flow, pred_cost)

    list_cap = 4096 if n_arcs > 4096 else n_arcs
    cand = np.empty(max(list_cap, 1), np.int64)
    cand_rc = np.empty(max(list_cap, 1), np.float64)
    n_cand = 0
    cand_pos = 0
    next_arc = 0
    it = 0
    since_refresh = 0
    status = OPTIMAL

    while True:
        # --- entering arc: pop the sorted queue until a violated arc is found
        best_e = -1
        best_rc = 0.0
        best_c = 0.0
        while cand_pos < n_cand:
            e = cand[cand_pos]
            cand_pos += 1
            if mode == DENSE:
                i = e // m
                j = e - i * m
                c = C[i, j]
                rc = c - pi[i] + pi[n + j]
            else:
                c = arc_c[e]
                rc = c - pi[arc_i[e]] + pi[n + arc_j[e]]
            if rc < -tol:
                best_e = e
                best_rc = rc
                best_c = c
                break
        if best_e == -1:
            # refill with one cyclic pass (capped); empty pass proves optimality
            n_cand = 0
            cand_pos = 0
            scanned = 0
            e = next_arc
            if mode == DENSE:
                i = e // m
                j = e - i * m
                while scanned < n_arcs:
                    rc = C[i, j] - pi[i] + pi[n + j]
                    if rc < -tol:
                        cand[n_cand] = e
                        cand_rc[n_cand] = rc
                        n_cand += 1
                    scanned += 1
                    e += 1
                    j += 1
                    if j == m:
                        j = 0
                        i += 1
                    if e == n_arcs:
                        e = 0
                        i = 0
                        j = 0
                    if n_cand >= list_cap:
                        break
            else:
                while scanned < n_arcs:
                    rc = arc_c[e] - pi[arc_i[e]] + pi[n + arc_j[e]]
                    if rc < -tol:
                        cand[n_cand] = e
                        cand_rc[n_cand] = rc
                        n_cand += 1
                    scanned += 1
                    e += 1
                    if e == n_arcs:
                        e = 0
                    if n_cand >= list_cap:
                        break
            next_arc = e
            if n_cand == 0:
                status = OPTIMAL
                break
            idx = np.argsort(cand_rc[:n_cand])
            cand[:n_cand] = cand[idx]
            cand_rc[:n_cand] = cand_rc[idx]
            continue
        it += 1
        if it > max_iter:
            status = ITERATION_LIMIT
            break

        if mode == DENSE:
            u_in = best_e // m
            v_in = n + (best_e - u_in * m)
        else:
            u_in = arc_i[best_e]
            v_in = n + arc_j[best_e]

        # --- apex of the pivot cycle
        w1 = u_in
        w2 = v_in
        while depth[w1] > depth[w2]:
            w1 = par[w1]
        while depth[w2] > depth[w1]:
            w2 = par[w2]
        while w1 != w2:
            w1 = par[w1]
            w2 = par[w2]
        apex = w1

        # --- leaving arc: min flow among arcs the cycle traverses backwards;
        # the cycle runs u_in -> v_in, v_in up to the apex, apex down to u_in
        delta = np.inf
        w_out = -1
        out_on_u_side = False
        w = u_in
        while w != apex:
            # traversed parent -> w (downward): up-pointing arcs oppose
            if _points_up(w, par[w], n):
                if flow[w] < delta:
                    delta = flow[w]
                    w_out = w
                    out_on_u_side = True
            w = par[w]
        w = v_in
        while w != apex:
            # traversed w -> parent (upward): down-pointing arcs oppose;
            # non-strict so ties pick the last blocking arc along the cycle
            # orientation (Cunningham's strongly-feasible-tree rule)
            if not _points_up(w, par[w], n):
                if flow[w] <= delta:
                    delta = flow[w]
                    w_out = w
                    out_on_u_side = False
            w = par[w]
        if w_out == -1:
            status = INFEASIBLE
            break

        # --- push delta around the cycle
        if delta > 0.0:
            w = u_in
            while w != apex:
                if _points_up(w, par[w], n):
                    flow[w] -= delta
                else:
                    flow[w] += delta
                w = par[w]
            w = v_in
            while w != apex:
                if _points_up(w, par[w], n):
                    flow[w] += delta
                else:
                    flow[w] -= delta
                w = par[w]

        # --- basis exchange: evert the detached subtree at the entering
        # endpoint x_in and hang it under the other endpoint y_in
        if out_on_u_side:
            x_in = u_in
            y_in = v_in
        else:
            x_in = v_in
            y_in = u_in

        v = x_in
        p = par[v]
        f_carry = flow[v]
        c_carry = pred_cost[v]
        _detach(v, par, first_child, next_sib, prev_sib)
        while v != w_out:
            pnext = par[p]
            fnext = flow[p]
            cnext = pred_cost[p]
            _detach(p, par, first_child, next_sib, prev_sib)
            _attach(p, v, par, first_child, next_sib, prev_sib)
            flow[p] = f_carry
            pred_cost[p] = c_carry
            f_carry = fnext
            c_carry = cnext
            v = p
            p = pnext
        _attach(x_in, y_in, par, first_child, next_sib, prev_sib)
        flow[x_in] = delta
        pred_cost[x_in] = best_c

        if out_on_u_side:
            d_pi = best_rc
        else:
            d_pi = -best_rc
        _subtree_refresh(x_in, par, first_child, next_sib, depth, pi, d_pi,
                         stack)

        since_refresh += 1
        if since_refresh >= refresh_every:
            _refresh_exact(n, m, a, b, par, first_child, next_sib, depth,
                           pi, flow, pred_cost, stack, order, sub)
            since_refresh = 0

    # --- exact final pass
    art_max, min_flow = _refresh_exact(n, m, a, b, par, first_child,
                                       next_sib, depth, pi, flow, pred_cost,
                                       stack, order, sub)
    total = 0.0
    for i in range(n):
        total += a[i]
    if status == OPTIMAL and art_max > 1e-9 * max(1.0, total):
        status = INFEASIBLE
    for v in range(root):
        if flow[v] < 0.0:
            flow[v] = 0.0

    # --- collect the real arcs of the final basis (zero flows included)
    cnt_b = 0
    for v in range(root):
        if par[v] != root:
            cnt_b += 1
    basic_i = np.empty(cnt_b, np.int64)
    basic_j = np.empty(cnt_b, np.int64)
    basic_f = np.empty(cnt_b, np.float64)
    k = 0
    for v in range(root):
        p = par[v]
        if p != root:
            if v < n:
                basic_i[k] = v
                basic_j[k] = p - n
            else:
                basic_i[k] = p
                basic_j[k] = v - n
            basic_f[k] = flow[v]
            k += 1

    return status, basic_i, basic_j, basic_f, pi[:n].copy(), pi[n:root].copy(), it


@njit(cache=True, parallel=True)
def pricing_scan(X, Y, f, g, metric_code, power, tol, cap, out_j, row_min):
    """Fused pricing scan for the column-generation path.

    For each source row: the minimum reduced cost over all targets and up to
    ``cap`` violated arcs well inside the row's violation band.  Costs are
    exact coordinate-difference sums (no norm trick), so the terminating
    scan doubles as the solver's dual-feasibility certificate.
    """
    n, d = X.shape
    m = Y.shape[0]
    for i in prange(n):
        fi = f[i]
        best = np.inf
        for j in range(m):
            acc = 0.0
            if metric_code == SCAN_EUCLID_POW:
                for k in range(d):
                    t = X[i, k] - Y[j, k]
                    acc += t * t
                dist = np.sqrt(acc)
            else:
                for k in range(d):
                    t = X[i, k] - Y[j, k]
                    acc += abs(t)
                dist = acc
            if power != 1.0:
                dist = dist ** power
            rc = dist - fi + g[j]
            if rc < best:
                best = rc
        row_min[i] = best
        for q in range(cap):
            out_j[i, q] = -1
        if best < -tol:
            band = 0.5 * best
            if band > -tol:
                band = -tol
            cnt = 0
            for j in range(m):
                acc = 0.0
                if metric_code == SCAN_EUCLID_POW:
                    for k in range(d):
                        t = X[i, k] - Y[j, k]
                        acc += t * t
                    dist = np.sqrt(acc)
                else:
                    for k in range(d):
                        t = X[i, k] - Y[j, k]
                        acc += abs(t)
                    dist = acc
                if power != 1.0:
                    dist = dist ** power
                rc = dist - fi + g[j]
                if rc <= band:
                    out_j[i, cnt] = j
                    cnt += 1
                    if cnt == cap:
                        break


_EMPTY_I = np.empty(0, np.int64)
_EMPTY_F = np.empty(0, np.float64)


def solve_dense(a, b, C, basis_i=None, basis_j=None, basis_c=None,
                max_iter=20_000_000, refresh_every=8192):
    """Network simplex on the complete bipartite problem with cost matrix C."""
    if basis_i is None:
        basis_i, basis_j, basis_c = _EMPTY_I, _EMPTY_I, _EMPTY_F
    return _simplex_core(a, b, DENSE, C, _EMPTY_I, _EMPTY_I, _EMPTY_F,
                         basis_i, basis_j, basis_c, max_iter, refresh_every)


def solve_arcs(a, b, arc_i, arc_j, arc_c, basis_i=None, basis_j=None,
               basis_c=None, max_iter=20_000_000, refresh_every=8192):
    """Network simplex restricted to an explicit arc list."""
    dummy_C = np.zeros((1, 1))
    if basis_i is None:
        basis_i, basis_j, basis_c = _EMPTY_I, _EMPTY_I, _EMPTY_F
    return _simplex_core(a, b, SPARSE, dummy_C, arc_i, arc_j, arc_c,
                         basis_i, basis_j, basis_c, max_iter, refresh_every)


def northwest_arcs(a, b):
    """Feasible staircase basis for arbitrary marginals."""
    n, m = len(a), len(b)
    ai, aj = [], []
    i = j = 0
    ra, rb = float(a[0]), float(b[0])
    while True:
        ai.append(i)
        aj.append(j)
        if ra <= rb:
            rb -= ra
            i += 1
            if i == n:
                break
            ra = float(a[i])
        else:
            ra -= rb
            j += 1
            if j == m:
                break
            rb = float(b[j])
    return np.array(ai, np.int64), np.array(aj, np.int64)


def warm_simplex():
    """Compile the jitted kernels on a toy instance (cached afterwards)."""
    a = np.array([0.5, 0.5])
    b = np.array([0.25, 0.75])
    C = np.array([[0.0, 1.0], [1.0, 0.5]])
    solve_dense(a, b, C)
    solve_arcs(a, b, np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]),
               C.ravel())
    X = np.zeros((2, 2))
    Y = np.ones((2, 2))
    out_j = np.empty((2, 4), np.int64)
    row_min = np.empty(2)
    pricing_scan(X, Y, np.zeros(2), np.zeros(2), SCAN_EUCLID_POW, 1.0,
                 1e-10, 4, out_j, row_min)
