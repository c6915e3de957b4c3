"""Energy storage benchmark: hourly charge/discharge planning over two days.

Decision vector x = [s, f_es, f_ed, f_eg, f_sd, f_sg, f_gs]: storage level,
then the six flows source->storage, source->demand, source->grid,
storage->demand, storage->grid, grid->storage.  Disturbance z = [D, E] is
the demand and renewable production available to the NEXT stage.  Storage
balance couples stages: next storage equals s + f_es - f_sd - f_sg + f_gs,
encoded as a pair of opposing inequality rows.

Price/demand/production curves are config defaults here (Economy-7 style
night tariff, sinusoidal demand, daylight solar); every run records the
config it used.
"""

import json
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..fadp import SPProblem
from .distributions import TruncatedNormalSpec, sample_truncated_normal, truncated_mean

# storage balance pattern: s_next = pattern @ x
_PATTERN = np.array([1.0, 1.0, 0.0, 0.0, -1.0, -1.0, 1.0])

_DEF_NIGHT = (23, 0, 1, 2, 3, 4, 5, 6)


def _default_retail(horizon, night_hours):
    p = np.empty(horizon)
    for t in range(1, horizon + 1):
        hour = (t - 1) % 24
        p[t - 1] = 10.0 if hour in night_hours else 20.0
    return p


def _default_demand_mean(horizon):
    # demand of stage t+1 is drawn at time t, covering hour t mod 24
    out = np.empty(horizon + 1)
    for t in range(horizon + 1):
        hour = t % 24
        out[t] = max(0.0, 5.0 + 3.0 * math.sin(2.0 * math.pi * (hour - 12) / 24.0))
    return out


def _default_energy_mean(horizon):
    out = np.empty(horizon + 1)
    for t in range(horizon + 1):
        hour = t % 24
        out[t] = 10.0 * max(0.0, math.sin(math.pi * (hour - 6) / 12.0))
    return out


@dataclass(frozen=True)
class EnergyConfig:
    horizon: int = 48
    s_max: float = 20.0
    r_c: float = 4.0
    r_d: float = 10.0
    s0: float = 0.0
    night_hours: Tuple[int, ...] = _DEF_NIGHT
    dump_stages: int = 3
    retail_price: Optional[np.ndarray] = None     # length horizon
    wholesale_price: Optional[np.ndarray] = None  # length horizon
    demand_mean: Optional[np.ndarray] = None      # length horizon+1
    demand_std: float = 1.5
    demand_support: Tuple[float, float] = (0.0, 15.0)
    energy_mean: Optional[np.ndarray] = None      # length horizon+1
    energy_std: float = 1.0
    energy_support: Tuple[float, float] = (0.0, 12.0)

    def __post_init__(self):
        T = self.horizon
        if T < 1:
            raise ValueError("horizon must be >= 1")
        if min(self.s_max, self.r_c, self.r_d) <= 0:
            raise ValueError("s_max, r_c, r_d must be positive")
        if not 0 <= self.s0 <= self.s_max:
            raise ValueError("s0 must lie in [0, s_max]")
        p = self.retail_price
        p = _default_retail(T, self.night_hours) if p is None \
            else np.asarray(p, dtype=np.float64)
        w = self.wholesale_price
        w = 0.6 * p if w is None else np.asarray(w, dtype=np.float64)
        if p.shape != (T,) or w.shape != (T,):
            raise ValueError("price arrays must have length horizon")
        if np.any(w < 0) or np.any(p < w):
            raise ValueError("prices must satisfy p >= w >= 0 at every stage")
        dm = self.demand_mean
        dm = _default_demand_mean(T) if dm is None else np.asarray(dm, dtype=np.float64)
        em = self.energy_mean
        em = _default_energy_mean(T) if em is None else np.asarray(em, dtype=np.float64)
        if dm.shape != (T + 1,) or em.shape != (T + 1,):
            raise ValueError("demand/energy mean arrays must have length horizon+1")
        object.__setattr__(self, "retail_price", p)
        object.__setattr__(self, "wholesale_price", w)
        object.__setattr__(self, "demand_mean", dm)
        object.__setattr__(self, "energy_mean", em)

    def demand_spec(self, t):
        lo, hi = self.demand_support
        return TruncatedNormalSpec(float(self.demand_mean[t]), self.demand_std, lo, hi)

    def energy_spec(self, t):
        lo, hi = self.energy_support
        return TruncatedNormalSpec(float(self.energy_mean[t]), self.energy_std, lo, hi)

    def truncate(self, horizon):
        """Copy of the config with a shorter horizon (arrays sliced)."""
        if horizon > self.horizon:
            raise ValueError("cannot extend the horizon")
        return replace(self, horizon=horizon,
                       retail_price=self.retail_price[:horizon],
                       wholesale_price=self.wholesale_price[:horizon],
                       demand_mean=self.demand_mean[:horizon + 1],
                       energy_mean=self.energy_mean[:horizon + 1])


def _constraint_matrix():
    """The 14x7 stage constraint matrix (identical across stages)."""
    Q = np.zeros((14, 7))
    Q[0, 0] = 1.0    # s_t <= balance of previous stage
    Q[1, 0] = -1.0   # and >=
    Q[2:8, 1:7] = -np.eye(6)      # flows >= 0
    Q[8] = -_PATTERN              # next storage >= 0
    Q[9] = _PATTERN               # next storage <= s_max
    Q[10, 1] = 1.0                # f_es + f_gs <= r_c
    Q[10, 6] = 1.0
    Q[11, 4] = 1.0                # f_sd + f_sg <= r_d
    Q[11, 5] = 1.0
    Q[12, 1] = 1.0                # f_es + f_ed + f_eg <= E
    Q[12, 2] = 1.0
    Q[12, 3] = 1.0
    Q[13, 2] = 1.0                # f_ed + f_sd <= D
    Q[13, 4] = 1.0
    return Q


def build_energy_problem(config=None):
    """SPProblem for the storage benchmark.  z = [demand, energy]."""
    if config is None:
        config = EnergyConfig()
    T = config.horizon
    Q = _constraint_matrix()
    W = np.zeros((14, 7))
    W[0] = -_PATTERN   # s_t - pattern @ x_{t-1} <= 0
    W[1] = _PATTERN

    base_c = np.zeros(14)
    base_c[9] = config.s_max
    base_c[10] = config.r_c
    base_c[11] = config.r_d

    def stage_c(t, z):
        c = base_c.copy()
        c[12] = z[1]   # renewable production cap
        c[13] = z[0]   # demand cap
        return c

    def stage_cost(t, x, z):
        p = config.retail_price[t - 1]
        w = config.wholesale_price[t - 1]
        return float(p * (x[6] - x[2] - x[4]) - w * (x[3] + x[5]))

    def disturbance_sampler(t, rng):
        d = sample_truncated_normal(config.demand_spec(t), rng)
        e = sample_truncated_normal(config.energy_spec(t), rng)
        return np.array([d, e])

    x0 = np.zeros(7)
    x0[0] = config.s0
    z0 = np.array([truncated_mean(config.demand_spec(0)),
                   truncated_mean(config.energy_spec(0))])

    return SPProblem(
        name="energy",
        horizon=T,
        decision_dims=(7,) * (T + 1),
        initial_x=x0,
        initial_z=z0,
        stage_cost=stage_cost,
        stage_Q=lambda t: Q,
        stage_W=lambda t, z: W,
        stage_c=stage_c,
        disturbance_sampler=disturbance_sampler,
        sampling_basis=None,
    )


def energy_no_storage_policy(E, D):
    """Optimal flows when there is no storage: serve demand, sell the rest."""
    f_ed = min(E, D)
    f_eg = max(0.0, E - f_ed)
    return np.array([0.0, 0.0, f_ed, f_eg, 0.0, 0.0, 0.0])


def energy_heuristic_policy(state, stage, config):
    """Greedy rule of thumb: sell solar now, buy cheap at night, dump late.

    state is (s, E, D) with s the current storage level.  Daytime surplus
    demand is served from the battery; night hours charge from the grid; the
    final dump_stages stages empty the battery into demand then the grid.
    """
    s, E, D = state
    T = config.horizon
    f_ed = min(E, D)
    f_eg = E - f_ed
    f_es = f_sd = f_sg = f_gs = 0.0
    hour = (stage - 1) % 24
    if stage > T - config.dump_stages:
        f_sd = min(config.r_d, s, D - f_ed)
        f_sg = min(config.r_d - f_sd, s - f_sd)
    elif hour in config.night_hours:
        f_gs = min(config.r_c, config.s_max - s)
    else:
        f_sd = min(config.r_d, s, D - f_ed)
    return np.array([s, f_es, f_ed, f_eg, f_sd, f_sg, f_gs])


def make_no_storage_policy(config):
    """Adapt the closed form to the (t, x_prev, z_prev) policy interface."""

    def policy(t, x_prev, z_prev):
        x = energy_no_storage_policy(E=z_prev[1], D=z_prev[0])
        x[0] = _PATTERN @ x_prev   # storage coordinate is pinned by dynamics
        return x

    return policy


def make_heuristic_policy(config):
    def policy(t, x_prev, z_prev):
        s = float(_PATTERN @ x_prev)
        x = energy_heuristic_policy((s, float(z_prev[1]), float(z_prev[0])), t, config)
        return x

    return policy


# ---------------------------------------------------------------------------
# config (de)serialization

def energy_config_to_dict(config):
    return {
        "problem": "energy",
        "horizon": config.horizon,
        "s_max": config.s_max,
        "r_c": config.r_c,
        "r_d": config.r_d,
        "s0": config.s0,
        "night_hours": list(config.night_hours),
        "dump_stages": config.dump_stages,
        "retail_price": config.retail_price.tolist(),
        "wholesale_price": config.wholesale_price.tolist(),
        "demand": {
            "std": config.demand_std,
            "support": list(config.demand_support),
            "mean": config.demand_mean.tolist(),
        },
        "energy": {
            "std": config.energy_std,
            "support": list(config.energy_support),
            "mean": config.energy_mean.tolist(),
        },
    }


def energy_config_from_dict(doc):
    if doc.get("problem", "energy") != "energy":
        raise ValueError("not an energy config")
    kw = {}
    for key in ("horizon", "s_max", "r_c", "r_d", "s0", "dump_stages"):
        if key in doc:
            kw[key] = doc[key]
    if "night_hours" in doc:
        kw["night_hours"] = tuple(doc["night_hours"])
    for key in ("retail_price", "wholesale_price"):
        if key in doc:
            kw[key] = np.asarray(doc[key], dtype=np.float64)
    for name, mean_key, std_key, sup_key in (
            ("demand", "demand_mean", "demand_std", "demand_support"),
            ("energy", "energy_mean", "energy_std", "energy_support")):
        sub = doc.get(name)
        if sub is None:
            continue
        if "mean" in sub:
            kw[mean_key] = np.asarray(sub["mean"], dtype=np.float64)
        if "std" in sub:
            kw[std_key] = sub["std"]
        if "support" in sub:
            kw[sup_key] = tuple(sub["support"])
    return EnergyConfig(**kw)


def save_energy_config(config, path):
    with open(path, "w") as fh:
        json.dump(energy_config_to_dict(config), fh, indent=2)
        fh.write("\n")
