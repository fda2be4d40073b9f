"""Pure-Python kernels.

Reference implementation of the hot paths.  ``_core.pyx`` mirrors every
function here operation for operation so both backends produce
bit-identical results; change them together.
"""

from math import log, sqrt

INF = float("inf")
TIE_RTOL = 1e-12


def hungarian_min(cost, rows, cols):
    """Min-cost assignment of ``rows`` into distinct ``cols`` (len(rows) <= len(cols)).

    Shortest augmenting path form of the Hungarian method with row
    potentials ``u`` and column potentials ``v``.  Returns the chosen column
    for each row plus the potentials, indexed like ``rows`` and ``cols``.
    """
    n = len(rows)
    m = len(cols)
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            crow = cost[rows[i0 - 1]]
            delta = INF
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = crow[cols[j - 1]] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = [0] * n
    for j in range(1, m + 1):
        if p[j] != 0:
            assign[p[j] - 1] = cols[j - 1]
    return assign, u[1:], v[1:]


def max_weight_matching(w):
    """Max-weight injective assignment of the rows of ``w`` (list of lists).

    Among optimal assignments (totals within a relative 1e-12 tie
    tolerance) the lexicographically smallest is returned.
    """
    m = len(w)
    n = len(w[0])
    cost = [[-x for x in row] for row in w]
    rows = list(range(m))
    assign, u, v = hungarian_min(cost, rows, list(range(n)))
    scale = 1.0
    for row in w:
        for x in row:
            if abs(x) > scale:
                scale = abs(x)
    tol = TIE_RTOL * scale * m
    best = 0.0
    for i in range(m):
        best += w[i][assign[i]]
    # Lexicographic pass: only edges tight under the optimal duals can sit in
    # an optimal assignment, so untight candidates are skipped unsolved.
    used = [False] * n
    prefix = 0.0
    for i in range(m):
        a = assign[i]
        for j in range(a):
            if used[j] or cost[i][j] - u[i] - v[j] > tol:
                continue
            rest_rows = list(range(i + 1, m))
            rest_cols = [c for c in range(n) if not used[c] and c != j]
            sub = 0.0
            sub_assign = []
            if rest_rows:
                sub_assign, _, _ = hungarian_min(cost, rest_rows, rest_cols)
                for k in range(len(rest_rows)):
                    sub += w[rest_rows[k]][sub_assign[k]]
            if prefix + w[i][j] + sub >= best - tol:
                assign[i] = j
                for k in range(len(rest_rows)):
                    assign[rest_rows[k]] = sub_assign[k]
                break
        used[assign[i]] = True
        prefix += w[i][assign[i]]
    total = 0.0
    for i in range(m):
        total += w[i][assign[i]]
    return assign, total


def mlmr_block(theta, counts, cur, cum, rew, nst, t, lvals, uniforms, out_rewards):
    """Run ``len(lvals)`` main-loop MLMR steps in place.

    ``theta`` (M×N float), ``counts`` (M×N int) and ``cur`` (M×N int chain
    states) are updated in place; ``t`` is the number of completed steps.
    ``lvals[k]`` is the exploration constant for step k, ``uniforms[k, i]``
    drives user i's chain transition.  Writes per-step total reward to
    ``out_rewards`` and returns the new step count.
    """
    m, n = theta.shape
    th = theta.tolist()
    cn = counts.tolist()
    cs = cur.tolist()
    cm = cum.tolist()
    rw = rew.tolist()
    ns = nst.tolist()
    us = uniforms.tolist()
    lv = lvals.tolist()
    for k in range(len(lv)):
        lnt = log(t)
        L = lv[k]
        w = [[th[i][j] + sqrt(L * lnt / cn[i][j]) for j in range(n)] for i in range(m)]
        assign, _ = max_weight_matching(w)
        total = 0.0
        uk = us[k]
        for i in range(m):
            j = assign[i]
            s = cs[i][j]
            y = rw[i][j][s]
            c = cn[i][j]
            th[i][j] = (th[i][j] * c + y) / (c + 1)
            cn[i][j] = c + 1
            row = cm[i][j][s]
            last = ns[i][j] - 1
            nxt = last
            x = uk[i]
            for z in range(last):
                if x < row[z]:
                    nxt = z
                    break
            cs[i][j] = nxt
            total += y
        out_rewards[k] = total
        t += 1
    theta[:, :] = th
    counts[:, :] = cn
    cur[:, :] = cs
    return t
