"""Inequality-form linear programming.

Self-contained dense two-phase revised simplex over

    minimize    objective @ v
    subject to  A v <= b        (v free)

plus the two derived solves the rest of the toolkit runs on: epigraph
minimization of a max-affine function over a polytope, and the Chebyshev
center LP that supplies interior points for sampling.

Method notes: free variables are split v = v+ - v-, slacks make rows
equalities, rows with negative right-hand side are flipped and receive
phase-one artificials.  Pricing is Dantzig (lowest index on ties) switching to
Bland's rule after a degeneracy streak, so termination is guaranteed; a hard
pivot budget turns numerical stalemates into an explicit failure status
instead of a hang.  The pivot loop itself lives in cvxadp.kernels.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

TOL_FEAS = 1e-7
TOL_OPT = 1e-9
TOL_PIVOT = 1e-10

_CHUNK = 40         # pivots between refactorizations
_STALL_PIVOTS = 80  # degenerate pivots before switching to Bland's rule

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERIC_FAILURE = "numeric_failure"


class LpError(Exception):
    """Base class for LP-layer errors."""


class InfeasibleRegionError(LpError):
    pass


class UnboundedRegionError(LpError):
    pass


class UnboundedObjectiveError(LpError):
    pass


class LpNumericError(LpError):
    pass


def _as_matrix(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("%s must be 2-D, got shape %s" % (name, a.shape))
    if not np.all(np.isfinite(a)):
        raise ValueError("%s has non-finite entries" % name)
    return a


def _as_vector(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("%s must be 1-D, got shape %s" % (name, a.shape))
    if not np.all(np.isfinite(a)):
        raise ValueError("%s has non-finite entries" % name)
    return a


@dataclass(frozen=True)
class Polytope:
    """H-representation {x : Q x <= c}."""

    Q: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        Q = _as_matrix(self.Q, "Q")
        c = _as_vector(self.c, "c")
        if Q.shape[0] != c.shape[0]:
            raise ValueError("Q has %d rows but c has %d" % (Q.shape[0], c.shape[0]))
        if Q.shape[0] < 1:
            raise ValueError("polytope needs at least one constraint row")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)

    @property
    def dim(self):
        return self.Q.shape[1]

    @property
    def nrows(self):
        return self.Q.shape[0]

    def residual(self, x):
        """Largest constraint violation at x (<= 0 means feasible)."""
        return float(np.max(self.Q @ np.asarray(x, dtype=np.float64) - self.c))

    def contains(self, x, tol=TOL_FEAS):
        return self.residual(x) <= tol


@dataclass(frozen=True)
class LinearProgram:
    """minimize objective @ v  subject to  A v <= b, v free."""

    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        obj = _as_vector(self.objective, "objective")
        A = _as_matrix(self.A, "A")
        b = _as_vector(self.b, "b")
        if A.shape[1] != obj.shape[0]:
            raise ValueError("A has %d columns but objective has %d" % (A.shape[1], obj.shape[0]))
        if A.shape[0] != b.shape[0]:
            raise ValueError("A has %d rows but b has %d" % (A.shape[0], b.shape[0]))
        if A.shape[1] < 1:
            raise ValueError("need at least one variable")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class LpResult:
    status: str
    x: Optional[np.ndarray]
    value: Optional[float]
    iterations: int = 0


class _Tableau:
    """Dense revised-simplex state for one equality-form problem."""

    def __init__(self, M, b, basis):
        self.M = M
        self.b = b
        self.basis = np.asarray(basis, dtype=np.int64)
        self.Binv = None
        self.xB = None
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis]
        try:
            self.Binv = np.ascontiguousarray(np.linalg.inv(B))
        except np.linalg.LinAlgError as exc:
            raise LpNumericError("singular basis during refactorization") from exc
        xB = self.Binv @ self.b
        np.copyto(xB, 0.0, where=(xB < 0) & (xB > -1e-9))
        if np.any(xB < -1e-9):
            raise LpNumericError("basis infeasible after refactorization")
        self.xB = np.ascontiguousarray(xB)

    def objective(self, cost):
        return float(cost[self.basis] @ self.xB)

    def pivot_in(self, q, r):
        """Force column q into the basis at row r (degenerate cleanup pivot)."""
        d = self.Binv @ self.M[:, q]
        piv = d[r]
        binv_r = self.Binv[r] / piv
        self.Binv -= np.outer(d, binv_r)
        self.Binv[r] = binv_r
        self.basis[r] = q
        self.refactor()

    def run(self, cost, allowed, maxiter):
        """Drive the kernel to optimality. Returns (status, pivots)."""
        cost = np.ascontiguousarray(cost, dtype=np.float64)
        allowed = np.ascontiguousarray(allowed, dtype=np.uint8)
        total = 0
        bland = False
        stall = 0
        last_obj = np.inf
        while total < maxiter:
            status, k = kernels.simplex_chunk(
                self.M, cost, self.basis, self.Binv, self.xB, allowed,
                int(bland), TOL_OPT, TOL_PIVOT, min(_CHUNK, maxiter - total))
            total += k
            self.refactor()
            if status == kernels.OPTIMAL:
                return OPTIMAL, total
            if status == kernels.UNBOUNDED:
                return UNBOUNDED, total
            obj = self.objective(cost)
            if obj > last_obj - 1e-12 * (1.0 + abs(last_obj)):
                stall += k
                if stall >= _STALL_PIVOTS:
                    bland = True
            else:
                stall = 0
            last_obj = obj
        return NUMERIC_FAILURE, total


def solve_lp(lp, maxiter=20000):
    """Solve an inequality-form LP.

    Returns an LpResult whose status is one of "optimal", "infeasible",
    "unbounded" or "numeric_failure"; solution and value are set only when
    optimal, and the solution then satisfies A x <= b + 1e-7 componentwise.

    >>> r = solve_lp(LinearProgram([-1.0], [[1.0], [-1.0]], [3.0, 0.0]))
    >>> r.status, round(r.x[0], 9), round(r.value, 9)
    ('optimal', 3.0, -3.0)
    """
    if not isinstance(lp, LinearProgram):
        lp = LinearProgram(*lp)
    A, b, obj = lp.A, lp.b, lp.objective
    m, d = A.shape

    sign = np.where(b < 0, -1.0, 1.0)
    A2 = A * sign[:, None]
    b2 = b * sign
    S = np.diag(sign)
    n_real = 2 * d + m
    need_art = np.flatnonzero(sign < 0)
    n_art = need_art.size

    M = np.empty((m, n_real + n_art))
    M[:, :d] = A2
    M[:, d:2 * d] = -A2
    M[:, 2 * d:n_real] = S
    if n_art:
        art = np.zeros((m, n_art))
        art[need_art, np.arange(n_art)] = 1.0
        M[:, n_real:] = art
    M = np.ascontiguousarray(M)
    b2 = np.ascontiguousarray(b2)

    basis = np.arange(2 * d, n_real, dtype=np.int64)  # slacks
    if n_art:
        basis[need_art] = n_real + np.arange(n_art)

    try:
        tab = _Tableau(M, b2, basis)
    except LpNumericError:
        return LpResult(NUMERIC_FAILURE, None, None, 0)

    iterations = 0
    feas_tol = max(TOL_FEAS, TOL_FEAS * float(np.max(np.abs(b2), initial=0.0)))

    if n_art:
        cost1 = np.zeros(n_real + n_art)
        cost1[n_real:] = 1.0
        allowed1 = np.ones(n_real + n_art, dtype=np.uint8)
        try:
            status, k = tab.run(cost1, allowed1, maxiter)
        except LpNumericError:
            return LpResult(NUMERIC_FAILURE, None, None, iterations)
        iterations += k
        if status != OPTIMAL:
            # phase one is bounded below by zero, so anything else is numeric
            return LpResult(NUMERIC_FAILURE, None, None, iterations)
        if tab.objective(cost1) > feas_tol:
            return LpResult(INFEASIBLE, None, None, iterations)
        try:
            tab = _drop_artificials(tab, b2, n_real)
        except LpNumericError:
            tab = None
        if tab is None:
            return LpResult(NUMERIC_FAILURE, None, None, iterations)

    cost2 = np.zeros(tab.M.shape[1])
    cost2[:d] = obj
    cost2[d:2 * d] = -obj
    allowed2 = np.ones(tab.M.shape[1], dtype=np.uint8)
    try:
        status, k = tab.run(cost2, allowed2, maxiter - iterations)
    except LpNumericError:
        return LpResult(NUMERIC_FAILURE, None, None, iterations)
    iterations += k
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None, iterations)
    if status != OPTIMAL:
        return LpResult(NUMERIC_FAILURE, None, None, iterations)

    v = np.zeros(tab.M.shape[1])
    v[tab.basis] = tab.xB
    x = v[:d] - v[d:2 * d]
    if np.max(A @ x - b) > TOL_FEAS:
        return LpResult(NUMERIC_FAILURE, None, None, iterations)
    return LpResult(OPTIMAL, x, float(obj @ x), iterations)


def _drop_artificials(tab, b2, n_real):
    """Remove artificials from the basis, dropping redundant rows if needed.

    Returns a tableau over the real columns only, or None on breakdown.
    """
    redundant = []
    for r in range(tab.basis.size):
        if tab.basis[r] < n_real:
            continue
        row = tab.Binv[r] @ tab.M[:, :n_real]
        row[tab.basis[tab.basis < n_real]] = 0.0  # basic columns not eligible
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size:
            tab.pivot_in(int(cand[0]), r)
        else:
            redundant.append(r)
    keep = np.setdiff1d(np.arange(tab.basis.size), redundant)
    M = np.ascontiguousarray(tab.M[np.ix_(keep, np.arange(n_real))])
    b = np.ascontiguousarray(b2[keep])
    basis = tab.basis[keep]
    if np.any(basis >= n_real):  # cleanup failed to clear an artificial
        return None
    try:
        return _Tableau(M, b, basis)
    except LpNumericError:
        return None


def minimize_max_affine(model, region, maxiter=20000):
    """Minimize a max-affine function over a polytope via the epigraph LP.

        minimize t  s.t.  t >= a_k @ x + b_k for all k,  Q x <= c

    Returns (x, value).  Raises InfeasibleRegionError / UnboundedObjectiveError
    / LpNumericError on the corresponding solver statuses.
    """
    slopes = model.slopes
    intercepts = model.intercepts
    Q, c = region.Q, region.c
    if slopes.shape[1] != Q.shape[1]:
        raise ValueError("model dimension %d != region dimension %d"
                         % (slopes.shape[1], Q.shape[1]))
    m, d = Q.shape
    K = slopes.shape[0]
    A = np.zeros((m + K, d + 1))
    A[:m, :d] = Q
    A[m:, :d] = slopes
    A[m:, d] = -1.0
    b = np.concatenate([c, -intercepts])
    obj = np.zeros(d + 1)
    obj[d] = 1.0
    res = solve_lp(LinearProgram(obj, A, b), maxiter=maxiter)
    if res.status == INFEASIBLE:
        raise InfeasibleRegionError("epigraph LP infeasible: empty region")
    if res.status == UNBOUNDED:
        raise UnboundedObjectiveError("max-affine objective unbounded below on region")
    if res.status != OPTIMAL:
        raise LpNumericError("epigraph LP failed: %s" % res.status)
    return res.x[:d], float(res.value)


def _chebyshev_lp(region, maxiter, perturb=None):
    Q, c = region.Q, region.c
    m, d = Q.shape
    norms = np.sqrt((Q * Q).sum(axis=1))
    A = np.concatenate([Q, norms[:, None]], axis=1)
    obj = np.zeros(d + 1)
    obj[d] = -1.0
    if perturb is not None:
        obj[:d] = perturb
    return solve_lp(LinearProgram(obj, A, c), maxiter=maxiter)


def chebyshev_center_signed(region, maxiter=20000, perturb=None):
    """Chebyshev LP with a signed radius: negative radius means empty region.

    The optional perturb vector tilts the objective by -perturb @ x, which the
    sampler uses to spread points over degenerate (radius ~ 0) sets.
    """
    res = _chebyshev_lp(region, maxiter, perturb)
    if res.status == UNBOUNDED:
        raise UnboundedRegionError("region admits arbitrarily large inscribed balls")
    if res.status == INFEASIBLE:
        # only possible via all-zero rows with negative rhs
        return None, -np.inf
    if res.status != OPTIMAL:
        raise LpNumericError("chebyshev LP failed: %s" % res.status)
    x = res.x
    return x[:-1], float(x[-1])


def chebyshev_center(region, maxiter=20000):
    """Center and radius of the largest ball inscribed in the region.

    Raises InfeasibleRegionError when the region is empty and
    UnboundedRegionError when the inscribed radius is unbounded.

    >>> box = Polytope([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
    ...                [1.0, 1.0, 1.0, 1.0])
    >>> ctr, rho = chebyshev_center(box)
    >>> bool(np.allclose(ctr, 0.0)), round(rho, 9)
    (True, 1.0)
    """
    ctr, rho = chebyshev_center_signed(region, maxiter=maxiter)
    if ctr is None or rho < -1e-9:
        raise InfeasibleRegionError("region is empty")
    return ctr, max(rho, 0.0)


def polytope_to_dict(region):
    return {"Q": region.Q.tolist(), "c": region.c.tolist()}


def polytope_from_dict(doc):
    return Polytope(np.asarray(doc["Q"], dtype=np.float64),
                    np.asarray(doc["c"], dtype=np.float64))


def save_polytope(region, path):
    with open(path, "w") as fh:
        json.dump(polytope_to_dict(region), fh, indent=2)
        fh.write("\n")


def load_polytope(path):
    with open(path) as fh:
        return polytope_from_dict(json.load(fh))
