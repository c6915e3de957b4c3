"""Pure numpy implementations of the hot kernels.

These are the reference implementations; cvxadp.kernels selects the compiled
Cython variants (same signatures, same algorithmic decisions) when available.
Both backends consume pre-generated random arrays, so a walk driven by either
one visits the same chain up to floating-point associativity.
"""

import numpy as np

# simplex_chunk status codes
OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def simplex_chunk(A, c, basis, Binv, xB, allowed, bland, tol_opt, tol_piv, max_pivots):
    """Run up to max_pivots revised-simplex pivots in place.

    A        (m, N) equality-form constraint matrix
    c        (N,)   cost vector
    basis    (m,)   int64 basic column indices, mutated
    Binv     (m, m) basis inverse, mutated
    xB       (m,)   basic values Binv @ b, mutated
    allowed  (N,)   bool, columns permitted to enter
    bland    0/1    pricing rule (0 Dantzig with lowest-index ties, 1 Bland)

    Returns (status, pivots_done).
    """
    m, N = A.shape
    pivots = 0
    in_basis = np.zeros(N, dtype=bool)
    in_basis[basis] = True
    while pivots < max_pivots:
        y = c[basis] @ Binv
        reduced = c - y @ A
        cand = allowed & ~in_basis & (reduced < -tol_opt)
        if not cand.any():
            return OPTIMAL, pivots
        if bland:
            q = int(np.argmax(cand))  # first allowed improving column
        else:
            masked = np.where(cand, reduced, 0.0)
            q = int(np.argmin(masked))  # most negative, first on ties
        d = Binv @ A[:, q]
        pos = d > tol_piv
        if not pos.any():
            return UNBOUNDED, pivots
        ratio = np.full(m, np.inf)
        ratio[pos] = xB[pos] / d[pos]
        theta = ratio.min()
        ties = np.flatnonzero(ratio <= theta + 1e-12 * (1.0 + abs(theta)))
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[0])
        piv = d[r]
        theta_r = xB[r] / piv
        binv_r = Binv[r] / piv
        Binv -= np.outer(d, binv_r)
        Binv[r] = binv_r
        xB -= d * theta_r
        xB[r] = theta_r
        np.copyto(xB, 0.0, where=(xB < 0) & (xB > -1e-11))
        in_basis[basis[r]] = False
        in_basis[q] = True
        basis[r] = q
        pivots += 1
    return BUDGET, pivots


def max_affine_argmax(slopes, intercepts, X):
    """Evaluate max_k (slopes[k] @ x + intercepts[k]) on the rows of X.

    Returns (values (n,), argmax (n,) int64); ties resolve to the lowest k.
    """
    vals = X @ slopes.T + intercepts
    idx = np.argmax(vals, axis=1)
    out = np.take_along_axis(vals, idx[:, None], axis=1)[:, 0]
    return out, idx.astype(np.int64)


def hit_and_run_walk(Q, cvec, x, dirs, unifs, want, out):
    """Advance a Hit-and-run chain, writing accepted positions into out.

    Q, cvec  polytope {v : Q v <= cvec}
    x        (d,) current position, mutated to the final position
    dirs     (S, d) pre-generated standard normal direction seeds
    unifs    (S,)   pre-generated U(0,1) chord positions
    want     number of positions to emit
    out      (want, d) output buffer

    One step consumes one (direction, uniform) pair.  Steps whose feasible
    chord is degenerate (or unbounded) emit nothing; the next pair acts as the
    resample.  Returns (emitted, consumed).
    """
    S = dirs.shape[0]
    emitted = 0
    consumed = 0
    while emitted < want and consumed < S:
        u = dirs[consumed]
        uu = unifs[consumed]
        consumed += 1
        nrm = np.sqrt(u @ u)
        if nrm <= 0.0:
            continue
        u = u / nrm
        qd = Q @ u
        slack = cvec - Q @ x
        np.maximum(slack, 0.0, out=slack)
        hi = np.inf
        lo = -np.inf
        up = qd > 1e-13
        dn = qd < -1e-13
        if up.any():
            hi = (slack[up] / qd[up]).min()
        if dn.any():
            lo = (slack[dn] / qd[dn]).max()
        if not (np.isfinite(hi) and np.isfinite(lo)):
            continue
        if hi - lo <= 1e-12:
            continue
        x += (lo + uu * (hi - lo)) * u
        out[emitted] = x
        emitted += 1
    return emitted, consumed
