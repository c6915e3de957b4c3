"""Beer brewery benchmark: fortnightly brewing over a year (T = 24).

Decision vector x (16-dim): 9 state coordinates (three ingredient stores,
ale fermenting < 2 weeks, produced ale, lager fermenting < 2 / 2-4 / 4-6
weeks, produced lager) followed by 7 actions (ingredient orders u_r, brews
u_b, sales u_s).  State dynamics x_state = F x_prev + R u_r + B u_b - S u_s
are encoded as paired inequalities; brews consume ingredients already in
store, sales are capped by demand and by produced stock.

The demand curves are config defaults (the benchmark's published form only
fixes cost vectors, recipes, capacities, and the truncation support).
"""

import json
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..fadp import SPProblem
from ..lp import InfeasibleRegionError, LinearProgram, LpNumericError, solve_lp
from .distributions import TruncatedNormalSpec, sample_truncated_normal, truncated_mean

_INF = float("inf")


def _default_mean_ale(horizon):
    return np.array([4.0 + 2.0 * math.sin(2.0 * math.pi * t / horizon + math.pi / 2)
                     for t in range(horizon + 1)])


def _default_mean_lager(horizon):
    return np.array([6.0 + 3.0 * math.sin(2.0 * math.pi * t / horizon)
                     for t in range(horizon + 1)])


@dataclass(frozen=True)
class BreweryConfig:
    horizon: int = 24
    storage_cost: Tuple[float, ...] = (1.0, 0.2, 0.2, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0)
    order_brew_cost: Tuple[float, ...] = (20.0, 10.0, 5.0, 1.0, 1.0)
    sale_price: Tuple[float, float] = (90.0, 50.0)      # ale, lager
    recipe_ale: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    recipe_lager: Tuple[float, float, float] = (0.5, 0.9, 0.8)
    capacity: Tuple[float, ...] = (10.0, 10.0, 10.0, 10.0, _INF, 10.0, _INF, _INF, _INF)
    demand_mean_ale: Optional[np.ndarray] = None    # length horizon+1
    demand_mean_lager: Optional[np.ndarray] = None  # length horizon+1
    demand_std: float = 1.5
    demand_support: Tuple[float, float] = (0.1, 12.0)

    def __post_init__(self):
        T = self.horizon
        if T < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.storage_cost) != 9 or len(self.order_brew_cost) != 5:
            raise ValueError("storage_cost needs 9 entries, order_brew_cost 5")
        if len(self.capacity) != 9:
            raise ValueError("capacity needs 9 entries")
        if min(self.storage_cost) < 0 or min(self.order_brew_cost) < 0 \
                or min(self.sale_price) < 0:
            raise ValueError("cost vectors must be nonnegative")
        ale = self.demand_mean_ale
        ale = _default_mean_ale(T) if ale is None else np.asarray(ale, dtype=np.float64)
        lager = self.demand_mean_lager
        lager = _default_mean_lager(T) if lager is None \
            else np.asarray(lager, dtype=np.float64)
        if ale.shape != (T + 1,) or lager.shape != (T + 1,):
            raise ValueError("demand mean arrays must have length horizon+1")
        object.__setattr__(self, "demand_mean_ale", ale)
        object.__setattr__(self, "demand_mean_lager", lager)

    def demand_spec(self, t, beer):
        mean = self.demand_mean_ale[t] if beer == "ale" else self.demand_mean_lager[t]
        lo, hi = self.demand_support
        return TruncatedNormalSpec(float(mean), self.demand_std, lo, hi)

    def truncate(self, horizon):
        if horizon > self.horizon:
            raise ValueError("cannot extend the horizon")
        return replace(self, horizon=horizon,
                       demand_mean_ale=self.demand_mean_ale[:horizon + 1],
                       demand_mean_lager=self.demand_mean_lager[:horizon + 1])


def brewery_matrices(config):
    """The F, B, R, S block matrices of the dynamics."""
    F = np.zeros((9, 16))
    F[0:3, 0:3] = np.eye(3)
    F[4, 3] = 1.0   # ale fermented < 2 weeks matures
    F[4, 4] = 1.0   # produced ale carries over
    F[6, 5] = 1.0   # lager < 2 weeks -> 2-4 weeks
    F[7, 6] = 1.0   # 2-4 -> 4-6
    F[8, 7] = 1.0   # 4-6 matures
    F[8, 8] = 1.0   # produced lager carries over
    B = np.zeros((9, 2))
    B[0:3, 0] = -np.asarray(config.recipe_ale)
    B[0:3, 1] = -np.asarray(config.recipe_lager)
    B[3, 0] = 1.0
    B[5, 1] = 1.0
    R = np.zeros((9, 3))
    R[0:3, 0:3] = np.eye(3)
    S = np.zeros((9, 2))
    S[4, 0] = 1.0
    S[8, 1] = 1.0
    return F, B, R, S


def _assemble(config):
    """Stage matrices (Q, W, base_c) for the stage constraint system.

    Row blocks (nf = number of finite capacities, 5 by default):
      0..8        dynamics upper    state - R u_r - B u_b + S u_s <= F x_prev
      9..17       dynamics lower    (negated pair)
      18..33      x >= 0            the decision lives in [0, inf)^16
      34..35      sales <= demand
      36..44      stock             brews/sales covered by previous stock
      45..44+nf   capacity          F x_prev + R u_r + B u_b <= k
      45+nf..     state capacity    state + S u_s <= k      (finite rows)

    The last two blocks describe the same bound on the true region (they
    differ by the dynamics equality), as do x >= 0 on the state slots and
    the stock rows.  Both "redundant" forms are kept because the forward
    pass samples a component-wise-max relaxation of a union of stage
    regions, and only decision-local rows (W = 0) survive that relaxation
    intact: without them the relaxed set admits states with negative or
    over-capacity stocks that no next-stage decision can repair.  With
    them, the all-zero action is feasible from every sampled point, so
    recourse stays complete along the whole pipeline.
    """
    F, B, R, S = brewery_matrices(config)
    E = np.zeros((9, 16))       # dynamics rows over the current decision
    E[:, 0:9] = np.eye(9)
    E[:, 9:12] = -R
    E[:, 12:14] = -B
    E[:, 14:16] = S
    nonneg = -np.eye(16)
    sell = np.zeros((2, 16))
    sell[0, 14] = 1.0
    sell[1, 15] = 1.0
    stock = np.zeros((9, 16))   # sales/brews covered by previous stock
    stock[:, 12:14] = -B
    stock[:, 14:16] = S
    finite = [i for i in range(9) if np.isfinite(config.capacity[i])]
    cap = np.zeros((len(finite), 16))
    cap[:, 9:12] = R[finite]
    cap[:, 12:14] = B[finite]
    state_cap = np.zeros((len(finite), 16))
    state_cap[:, 0:9] = np.eye(9)[finite]
    state_cap[:, 14:16] = S[finite]

    Q = np.concatenate([E, -E, nonneg, sell, stock, cap, state_cap])
    W = np.zeros_like(Q)
    W[0:9] = -F
    W[9:18] = F
    W[36:45] = -F
    W[45:45 + len(finite)] = F[finite]
    base_c = np.zeros(Q.shape[0])
    base_c[45:45 + len(finite)] = np.asarray(config.capacity)[finite]
    base_c[45 + len(finite):] = np.asarray(config.capacity)[finite]
    return Q, W, base_c


def build_brewery_problem(config=None):
    """SPProblem for the brewery.  z = [ale demand, lager demand]."""
    if config is None:
        config = BreweryConfig()
    T = config.horizon
    Q, W, base_c = _assemble(config)
    h = np.asarray(config.storage_cost)
    c_ob = np.asarray(config.order_brew_cost)
    r = np.asarray(config.sale_price)
    cost_vec = np.concatenate([h, c_ob, -r])

    def stage_c(t, z):
        c = base_c.copy()
        c[34] = z[0]
        c[35] = z[1]
        return c

    def stage_cost(t, x, z):
        return float(cost_vec @ x)

    def disturbance_sampler(t, rng):
        ale = sample_truncated_normal(config.demand_spec(t, "ale"), rng)
        lager = sample_truncated_normal(config.demand_spec(t, "lager"), rng)
        return np.array([ale, lager])

    F, B, R, S = brewery_matrices(config)
    basis = np.eye(16)
    basis[0:9, 9:16] = np.concatenate([R, B, -S], axis=1)

    return SPProblem(
        name="brewery",
        horizon=T,
        decision_dims=(16,) * (T + 1),
        initial_x=np.zeros(16),
        initial_z=np.zeros(2),
        stage_cost=stage_cost,
        stage_Q=lambda t: Q,
        stage_W=lambda t, z: W,
        stage_c=stage_c,
        disturbance_sampler=disturbance_sampler,
        sampling_basis=basis,
    )


def brewery_mean_demands(config):
    """The deterministic demand path: z_0 = 0, then truncated means."""
    T = config.horizon
    zs = [np.zeros(2)]
    for t in range(1, T + 1):
        zs.append(np.array([truncated_mean(config.demand_spec(t, "ale")),
                            truncated_mean(config.demand_spec(t, "lager"))]))
    return zs


def brewery_deterministic_baseline(config=None, maxiter=200000):
    """Open-loop optimum of the expectation problem: one stacked LP.

    Demands are fixed at their truncated means (z_0 = 0 for stage 1).
    Returns (plan, revenue): the (T, 16) decision sequence and the revenue
    -objective it achieves on the deterministic problem.
    """
    if config is None:
        config = BreweryConfig()
    T = config.horizon
    Q, W, base_c = _assemble(config)
    zs = brewery_mean_demands(config)
    rows, d = Q.shape

    A = np.zeros((rows * T, d * T))
    b = np.empty(rows * T)
    for t in range(1, T + 1):
        r0 = (t - 1) * rows
        A[r0:r0 + rows, (t - 1) * d:t * d] = Q
        if t >= 2:
            A[r0:r0 + rows, (t - 2) * d:(t - 1) * d] = W
        c = base_c.copy()
        c[34] = zs[t - 1][0]
        c[35] = zs[t - 1][1]
        b[r0:r0 + rows] = c   # stage 1: W @ x0 = 0 since x0 = 0

    h = np.asarray(config.storage_cost)
    c_ob = np.asarray(config.order_brew_cost)
    r = np.asarray(config.sale_price)
    cost_vec = np.concatenate([h, c_ob, -r])
    obj = np.tile(cost_vec, T)

    res = solve_lp(LinearProgram(obj, A, b), maxiter=maxiter)
    if res.status == "infeasible":
        raise InfeasibleRegionError("deterministic brewery LP infeasible")
    if res.status != "optimal":
        raise LpNumericError("deterministic brewery LP failed: %s" % res.status)
    plan = res.x.reshape(T, d)
    return plan, -float(res.value)


def make_plan_policy(plan):
    """Replay an open-loop plan through the policy interface."""

    def policy(t, x_prev, z_prev):
        return plan[t - 1]

    return policy


# ---------------------------------------------------------------------------
# config (de)serialization

def brewery_config_to_dict(config):
    return {
        "problem": "brewery",
        "horizon": config.horizon,
        "storage_cost": list(config.storage_cost),
        "order_brew_cost": list(config.order_brew_cost),
        "sale_price": list(config.sale_price),
        "recipe_ale": list(config.recipe_ale),
        "recipe_lager": list(config.recipe_lager),
        "capacity": [k if math.isfinite(k) else None for k in config.capacity],
        "demand": {
            "std": config.demand_std,
            "support": list(config.demand_support),
            "mean_ale": config.demand_mean_ale.tolist(),
            "mean_lager": config.demand_mean_lager.tolist(),
        },
    }


def brewery_config_from_dict(doc):
    if doc.get("problem", "brewery") != "brewery":
        raise ValueError("not a brewery config")
    kw = {}
    if "horizon" in doc:
        kw["horizon"] = doc["horizon"]
    for key in ("storage_cost", "order_brew_cost", "sale_price",
                "recipe_ale", "recipe_lager"):
        if key in doc:
            kw[key] = tuple(doc[key])
    if "capacity" in doc:
        kw["capacity"] = tuple(_INF if k is None else float(k)
                               for k in doc["capacity"])
    sub = doc.get("demand")
    if sub is not None:
        if "mean_ale" in sub:
            kw["demand_mean_ale"] = np.asarray(sub["mean_ale"], dtype=np.float64)
        if "mean_lager" in sub:
            kw["demand_mean_lager"] = np.asarray(sub["mean_lager"], dtype=np.float64)
        if "std" in sub:
            kw["demand_std"] = sub["std"]
        if "support" in sub:
            kw["demand_support"] = tuple(sub["support"])
    return BreweryConfig(**kw)


def save_brewery_config(config, path):
    with open(path, "w") as fh:
        json.dump(brewery_config_to_dict(config), fh, indent=2)
        fh.write("\n")
