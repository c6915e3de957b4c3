"""Full approximate dynamic programming over convex stage problems.

Forward pass: sample reachable decisions stage by stage.  Backward pass:
price each sampled decision by averaging stage cost plus the LP minimum of
the next stage's cost-to-go estimate over the exact constraint set, then fit
a max-affine estimate to those targets.  Evaluation: roll out the greedy
policy against the fitted stack and report revenue (negative total cost).

Randomness is organized as named substreams of one master seed so that runs
are reproducible, parallelism cannot reorder draws, and two runs differing
only in regressor settings still consume identical forward samples and
evaluation disturbances.
"""

import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from ._parallel import map_ordered
from ._rng import stream, substream_seed
from .amap import (AmapParams, TrainedEstimate, estimate_from_dict,
                   estimate_to_dict, train)
from .lp import InfeasibleRegionError, Polytope, minimize_max_affine
from .maxaffine import Dataset
from .sampler import (DegenerateRegionError, HitAndRunConfig, SampleInfo,
                      reachable_polytope, sample_uniform)


@dataclass(frozen=True)
class SPProblem:
    """A T-stage convex problem with fixed recourse.

    Stage t (1-based) chooses x_t inside
        X_t(x_{t-1}, z_{t-1}) = {x : Q_t x <= c_t(z_{t-1}) - W_t(z_{t-1}) x_{t-1}}
    and pays stage_cost(t, x_t, z_t) where z_t is drawn after the decision.
    Q_t never depends on the disturbance (fixed recourse), which is what
    makes the componentwise-max reachable set exact.

    sampling_basis, when given, is an invertible matrix M such that walking
    uniformly in y with x = M y turns the problem's equality-pair constraints
    into axis-aligned flats the sampler can pin; uniformity is preserved
    because an invertible affine map preserves uniform measure.
    """

    name: str
    horizon: int
    decision_dims: Tuple[int, ...]          # d_t for t = 0..T
    initial_x: np.ndarray
    initial_z: np.ndarray
    stage_cost: Callable[[int, np.ndarray, np.ndarray], float]
    stage_Q: Callable[[int], np.ndarray]
    stage_W: Callable[[int, np.ndarray], np.ndarray]
    stage_c: Callable[[int, np.ndarray], np.ndarray]
    disturbance_sampler: Callable[[int, np.random.Generator], np.ndarray]
    sampling_basis: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.decision_dims) != self.horizon + 1:
            raise ValueError("decision_dims must have horizon+1 entries")
        object.__setattr__(self, "initial_x",
                           np.ascontiguousarray(self.initial_x, dtype=np.float64))
        object.__setattr__(self, "initial_z",
                           np.ascontiguousarray(self.initial_z, dtype=np.float64))

    def constraint_builder(self, t, x_prev, z_prev):
        """The stage-t constraint polytope X_t(x_prev, z_prev)."""
        Q = self.stage_Q(t)
        rhs = self.stage_c(t, z_prev) - self.stage_W(t, z_prev) @ np.asarray(
            x_prev, dtype=np.float64)
        return Polytope(Q, rhs)


@dataclass
class SampleBank:
    """Forward samples and backward targets, indexed by stage 0..T.

    decisions[0] is n copies of x0 and disturbances[0] is m copies of z0;
    targets[t] appears once the backward pass reaches stage t (None before).
    """

    decisions: List[np.ndarray]
    disturbances: List[np.ndarray]
    targets: List[Optional[np.ndarray]]
    infos: List[Optional[SampleInfo]] = field(default_factory=list)

    @property
    def n(self):
        return self.decisions[0].shape[0]

    @property
    def m(self):
        return self.disturbances[0].shape[0]


@dataclass(frozen=True)
class CostToGoStack:
    """Per-stage cost-to-go estimates J_1..J_T (J_{T+1} is identically 0)."""

    estimates: Tuple[TrainedEstimate, ...]
    problem: str = ""

    @property
    def horizon(self):
        return len(self.estimates)

    def estimate(self, t):
        if not 1 <= t <= self.horizon:
            raise IndexError("stage %d outside 1..%d" % (t, self.horizon))
        return self.estimates[t - 1]


@dataclass(frozen=True)
class EvaluationReport:
    episode_revenues: Tuple[float, ...]
    mean: float
    std: float
    episodes: int
    feasible_fraction: float
    max_residual: float


def forward_pass(problem, n, m, seed):
    """Sample the forward pass: n decisions and m disturbances per stage.

    Stage-(t+1) decisions are drawn uniformly from the reachable polytope of
    the stage-t samples; disturbances come from the problem's sampler on the
    stream (seed, "dist", t, j).  Returns a SampleBank with empty targets.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    T = problem.horizon
    decisions = [np.tile(problem.initial_x, (n, 1))]
    disturbances = [np.tile(problem.initial_z, (m, 1))]
    infos = [None]
    basis = problem.sampling_basis
    for t in range(T):
        Q = problem.stage_Q(t + 1)
        region = reachable_polytope(
            Q,
            lambda z, _t=t + 1: problem.stage_W(_t, z),
            lambda z, _t=t + 1: problem.stage_c(_t, z),
            decisions[t], disturbances[t])
        cfg = HitAndRunConfig(seed=substream_seed(seed, "forward", t))
        try:
            if basis is None:
                xs, info = sample_uniform(region, n, cfg)
            else:
                walk_region = Polytope(Q @ basis, region.c)
                ys, info = sample_uniform(walk_region, n, cfg)
                xs = ys @ basis.T
        except DegenerateRegionError as exc:
            raise DegenerateRegionError("stage %d: %s" % (t + 1, exc)) from exc
        decisions.append(np.ascontiguousarray(xs))
        infos.append(info)
        zs = np.stack([problem.disturbance_sampler(t + 1, stream(seed, "dist", t + 1, j))
                       for j in range(m)])
        disturbances.append(np.ascontiguousarray(zs, dtype=np.float64))
    return SampleBank(decisions=decisions,
                      disturbances=disturbances,
                      targets=[None] * (T + 1),
                      infos=infos)


def backward_targets(problem, t, bank, next_estimate, threads=1):
    """Monte-Carlo cost-to-go targets for the stage-t samples.

        y_i = (1/m) sum_j [ c_t(x_i, z_j) + min_{x in X_{t+1}(x_i, z_j)} J_{t+1}(x) ]

    next_estimate must be None exactly at t = T (the LP term is omitted).
    An infeasible inner LP is a hard error: it contradicts relatively
    complete recourse, so the constraint encoding is wrong upstream.
    """
    T = problem.horizon
    if (next_estimate is None) != (t == T):
        raise ValueError("next_estimate must be supplied iff t < T")
    xs = bank.decisions[t]
    zs = bank.disturbances[t]
    m = zs.shape[0]

    def target(i):
        x = xs[i]
        total = 0.0
        for j in range(m):
            z = zs[j]
            total += problem.stage_cost(t, x, z)
            if next_estimate is not None:
                region = problem.constraint_builder(t + 1, x, z)
                try:
                    _, val = minimize_max_affine(next_estimate.model, region)
                except InfeasibleRegionError as exc:
                    raise InfeasibleRegionError(
                        "recourse violated at stage t=%d, decision i=%d, "
                        "disturbance j=%d: %s" % (t, i, j, exc)) from exc
                total += val
        return total / m

    return np.array(map_ordered(target, range(xs.shape[0]), threads))


def run_fadp(problem, n, m, regressor_params=None, seed=0, threads=1):
    """Algorithm: forward sampling, then backward target fitting per stage.

    Returns (CostToGoStack, SampleBank).  The AMAP seed for stage t is a
    named substream of regressor_params.seed, so regressor settings never
    perturb the forward samples drawn from `seed`.
    """
    if regressor_params is None:
        regressor_params = AmapParams()
    T = problem.horizon
    bank = forward_pass(problem, n, m, seed)
    estimates = [None] * (T + 1)
    next_est = None
    for t in range(T, 0, -1):
        y = backward_targets(problem, t, bank, next_est, threads)
        bank.targets[t] = y
        params_t = replace(regressor_params,
                           seed=substream_seed(regressor_params.seed, "amap-stage", t))
        est = train(Dataset(bank.decisions[t], y), params_t, threads)
        estimates[t] = est
        next_est = est
    return CostToGoStack(tuple(estimates[1:]), problem=problem.name), bank


def greedy_action(estimate, region):
    """argmin of the estimate over the region (epigraph LP)."""
    x, _ = minimize_max_affine(estimate.model, region)
    return x


class GreedyPolicy:
    """Stage decision rule: minimize J_t over X_t(x_prev, z_prev)."""

    def __init__(self, problem, stack):
        if stack.horizon != problem.horizon:
            raise ValueError("stack horizon %d != problem horizon %d"
                             % (stack.horizon, problem.horizon))
        self.problem = problem
        self.stack = stack

    def __call__(self, t, x_prev, z_prev):
        region = self.problem.constraint_builder(t, x_prev, z_prev)
        return greedy_action(self.stack.estimate(t), region)


def evaluate_policy(problem, policy, episodes, seed=0, threads=1):
    """Simulate a policy and report revenue statistics.

    policy is a CostToGoStack (evaluated greedily) or any callable
    (t, x_prev, z_prev) -> x_t.  Each episode e draws its stage-t disturbance
    from stream (seed, "eval-dist", e, t) after the decision, so different
    policies under the same seed face identical disturbance sequences.
    Revenue is the negative sum of stage costs.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if isinstance(policy, CostToGoStack):
        policy = GreedyPolicy(problem, policy)
    T = problem.horizon

    def episode(e):
        x_prev = problem.initial_x
        z_prev = problem.initial_z
        total = 0.0
        worst = -np.inf
        for t in range(1, T + 1):
            x = np.asarray(policy(t, x_prev, z_prev), dtype=np.float64)
            region = problem.constraint_builder(t, x_prev, z_prev)
            worst = max(worst, region.residual(x))
            z = problem.disturbance_sampler(t, stream(seed, "eval-dist", e, t))
            total += problem.stage_cost(t, x, z)
            x_prev, z_prev = x, z
        return -total, worst

    results = map_ordered(episode, range(episodes), threads)
    revenues = np.array([r for r, _ in results])
    worsts = np.array([w for _, w in results])
    feasible = float(np.mean(worsts <= 1e-7))
    std = float(np.std(revenues, ddof=1)) if episodes > 1 else 0.0
    return EvaluationReport(episode_revenues=tuple(float(r) for r in revenues),
                            mean=float(np.mean(revenues)), std=std,
                            episodes=episodes,
                            feasible_fraction=feasible,
                            max_residual=float(np.max(worsts)))


# ---------------------------------------------------------------------------
# serialization

def stack_to_dict(stack):
    return {
        "format": "cvxadp-stack",
        "version": 1,
        "problem": stack.problem,
        "horizon": stack.horizon,
        "estimates": [estimate_to_dict(e) for e in stack.estimates],
    }


def stack_from_dict(doc):
    if doc.get("format") != "cvxadp-stack":
        raise ValueError("not a cost-to-go stack document")
    ests = tuple(estimate_from_dict(e) for e in doc["estimates"])
    return CostToGoStack(ests, problem=doc.get("problem", ""))


def save_stack(stack, path):
    with open(path, "w") as fh:
        json.dump(stack_to_dict(stack), fh, indent=2)
        fh.write("\n")


def load_stack(path):
    with open(path) as fh:
        return stack_from_dict(json.load(fh))


def save_bank_csv(bank, directory):
    """Dump per-stage decisions (and targets when present) as CSV files."""
    os.makedirs(directory, exist_ok=True)
    for t, X in enumerate(bank.decisions):
        y = bank.targets[t] if t < len(bank.targets) else None
        path = os.path.join(directory, "stage_%02d.csv" % t)
        with open(path, "w") as fh:
            for i in range(X.shape[0]):
                row = [repr(float(v)) for v in X[i]]
                if y is not None:
                    row.append(repr(float(y[i])))
                fh.write(",".join(row) + "\n")
