"""AMAP: adaptive max-affine partitioning with cross-validated stopping.

Training pipeline: shuffle, center/rotate/scale the data (thin SVD), then
grow per-fold max-affine models by repeated improvement steps.  One step
splits a partition cell at a coordinate median, refits the two halves, and
polishes with LSPA rounds (induce partition, refit) while the risk strictly
drops and no cell falls under the minimum cell size.  Cross-validation error
over the folds picks the stopping iteration; the winning fold model is
composed back to raw coordinates.
"""

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._parallel import map_ordered
from ._rng import stream
from .maxaffine import (AffineMap, Dataset, MaxAffineModel, Partition,
                        _ridge_cell, compose_with_affine, empirical_risk,
                        fit_partition, induced_partition, model_from_dict,
                        model_to_dict)

EPS_RANK = 1e-10


class DegenerateInputError(ValueError):
    """Raised by preprocess when X has no nonzero singular values."""


@dataclass(frozen=True)
class AmapParams:
    folds: int = 10
    patience: int = 5
    beta: float = 1e-6
    min_cell_override: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.min_cell_override is not None and self.min_cell_override < 1:
            raise ValueError("min_cell_override must be >= 1")


@dataclass(frozen=True)
class FoldState:
    model: MaxAffineModel
    partition: Partition
    train_risk: float
    test_risk: float
    converged: bool = False


@dataclass(frozen=True)
class TrainedEstimate:
    """Final model in raw coordinates plus the preprocessing that built it."""

    model: MaxAffineModel
    preprocess: AffineMap
    final_train_risk: float
    flags: Tuple[str, ...] = ()


def min_cell_size(n, d_pre, override=None):
    if override is not None:
        return int(override)
    return max(2 * (d_pre + 1), math.ceil(math.log2(n)))


def model_cap(n, d_pre):
    return math.ceil(n ** (d_pre / (d_pre + 4.0)))


def preprocess(raw):
    """Center, rotate to singular-vector coordinates, and scale.

    Returns (dataset, AffineMap) where the dataset holds rows of U S / s*
    (s* = max(1, largest singular value)) with targets divided by
    yscale = max(1, max |y|), and the map sends raw points to the same
    coordinates with output_scale = yscale.  Coordinates whose singular value
    is at most EPS_RANK times the largest are dropped.  Raises
    DegenerateInputError when every singular value is dropped.

    Sign fixing: each kept left-singular vector's largest-magnitude entry is
    made positive (first such entry on ties), so the output does not depend
    on how the underlying SVD routine orients singular vectors, and rotating
    the raw coordinates leaves the preprocessed points unchanged.
    """
    X, y = raw.points, raw.targets
    mu = X.mean(axis=0)
    Xc = X - mu
    yscale = max(1.0, float(np.max(np.abs(y))))
    U, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    if S.size == 0 or S[0] <= EPS_RANK:
        raise DegenerateInputError("all singular values vanish")
    keep = np.flatnonzero(S > EPS_RANK * S[0])
    U = U[:, keep].copy()
    S = S[keep]
    Vt = Vt[keep].copy()
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
            Vt[j] = -Vt[j]
    sstar = max(1.0, float(S[0]))
    pre = Dataset(U * (S / sstar), y / yscale)
    amap = AffineMap(Vt / sstar, mu, yscale)
    return pre, amap


def _top2(vals):
    # per-row largest and second-largest entries plus the argmax
    n = vals.shape[0]
    idx = np.argmax(vals, axis=1)
    rows = np.arange(n)
    top1 = vals[rows, idx]
    masked = vals.copy()
    masked[rows, idx] = -np.inf
    top2 = masked.max(axis=1, initial=-np.inf)
    return top1, top2, idx


def improve_step(data, model, partition, risk, mcs, beta=1e-6):
    """One AMAP improvement: best median split, then LSPA polish.

    Returns (model, partition, risk); the inputs come back unchanged (same
    objects) when no median split strictly improves the empirical risk.
    Every stored sub-cell the split creates has at least mcs points.
    """
    X, y = data.points, data.targets
    n = data.n
    vals = X @ model.slopes.T + model.intercepts
    top1, top2, argtop = _top2(vals)

    best = None  # (risk, k, left_fit, right_fit, a1, b1, a2, b2, left_store, right_store)
    for k, cell in enumerate(partition.cells):
        if cell.size < 2 * mcs:
            continue
        base = np.where(argtop == k, top2, top1)
        Xcell = X[cell]
        for j in range(data.d):
            xs = Xcell[:, j]
            m = np.median(xs)
            le = xs <= m
            ge = xs >= m
            if le.all() or ge.all():
                continue  # one fit side would equal the whole cell
            left_store = cell[le]   # ties live on the <= side of the stored split
            right_store = cell[~le]
            if left_store.size < mcs or right_store.size < mcs:
                continue
            right_fit = cell[ge]    # but both fits see the tied points
            a1, b1 = _ridge_cell(X[left_store], y[left_store], beta)
            a2, b2 = _ridge_cell(X[right_fit], y[right_fit], beta)
            cand = np.maximum(base, np.maximum(X @ a1 + b1, X @ a2 + b2))
            resid = cand - y
            cand_risk = float(resid @ resid) / n
            if best is None or cand_risk < best[0]:
                best = (cand_risk, k, a1, b1, a2, b2, left_store, right_store)
    if best is None:
        return model, partition, risk

    _, k, a1, b1, a2, b2, left_store, right_store = best
    slopes = np.concatenate([model.slopes[:k], [a1], [a2], model.slopes[k + 1:]])
    intercepts = np.concatenate([model.intercepts[:k], [b1, b2], model.intercepts[k + 1:]])
    cand_model = MaxAffineModel(slopes, intercepts)
    cand_part = Partition(partition.cells[:k] + (left_store, right_store)
                          + partition.cells[k + 1:])
    cand_risk = empirical_risk(cand_model, data)
    if not cand_risk < risk:
        return model, partition, risk

    cur_model, cur_part, cur_risk = cand_model, cand_part, cand_risk
    while True:
        P = induced_partition(cur_model, data)
        if P.min_cell < mcs:
            break
        M = fit_partition(data, P, beta)
        E = empirical_risk(M, data)
        if not E < cur_risk:
            break
        cur_model, cur_part, cur_risk = M, P, E
    return cur_model, cur_part, cur_risk


def _init_fold(train_data, test_data, beta):
    part = Partition.trivial(train_data.n)
    model = fit_partition(train_data, part, beta)
    return FoldState(model=model, partition=part,
                     train_risk=empirical_risk(model, train_data),
                     test_risk=empirical_risk(model, test_data),
                     converged=False)


def train(raw, params=None, threads=1):
    """Run AMAP on a raw dataset; returns a TrainedEstimate.

    Degenerate inputs (all points identical) yield a constant model carrying
    the flag "degenerate-input" instead of an error.
    """
    if params is None:
        params = AmapParams()
    n, d = raw.n, raw.d
    if n < max(params.folds, d + 2):
        raise ValueError("need n >= max(folds, d+2) = %d, got %d"
                         % (max(params.folds, d + 2), n))

    rng = stream(params.seed, "amap-shuffle")
    perm = rng.permutation(n)
    shuffled = raw.subset(perm)

    try:
        pre, amap = preprocess(shuffled)
    except DegenerateInputError:
        warnings.warn("degenerate input: fitting a constant model")
        ybar = float(shuffled.targets.mean())
        model = MaxAffineModel(np.zeros((1, d)), np.array([ybar]))
        return TrainedEstimate(model=model, preprocess=AffineMap.identity(d),
                               final_train_risk=empirical_risk(model, raw),
                               flags=("degenerate-input",))

    d_pre = pre.d
    mcs = min_cell_size(n, d_pre, params.min_cell_override)
    cap = model_cap(n, d_pre)
    beta = params.beta

    blocks = np.array_split(np.arange(n), params.folds)
    fold_train = [pre.subset(np.concatenate([b for j, b in enumerate(blocks) if j != g]))
                  for g in range(params.folds)]
    fold_test = [pre.subset(blocks[g]) for g in range(params.folds)]
    folds = [_init_fold(fold_train[g], fold_test[g], beta)
             for g in range(params.folds)]

    def snapshot():
        return [f.model for f in folds]

    best_cv = float(np.mean([f.test_risk for f in folds]))
    best_models = snapshot()
    t_max = params.patience
    t = 1
    while t <= min(t_max, cap):
        def step(g):
            f = folds[g]
            if f.converged:
                return f
            model, part, risk = improve_step(fold_train[g], f.model, f.partition,
                                             f.train_risk, mcs, beta)
            if model is f.model:
                return FoldState(f.model, f.partition, f.train_risk,
                                 f.test_risk, converged=True)
            return FoldState(model, part, risk,
                             empirical_risk(model, fold_test[g]), False)

        folds = map_ordered(step, range(params.folds), threads)
        cv = float(np.mean([f.test_risk for f in folds]))
        if cv < best_cv:
            best_cv = cv
            best_models = snapshot()
            t_max = t + params.patience
        if all(f.converged for f in folds):
            break
        t += 1

    full_risks = [empirical_risk(m, pre) for m in best_models]
    winner = best_models[int(np.argmin(full_risks))]
    final = compose_with_affine(winner, amap)
    return TrainedEstimate(model=final, preprocess=amap,
                           final_train_risk=empirical_risk(final, raw),
                           flags=())


# ---------------------------------------------------------------------------
# serialization

def estimate_to_dict(est):
    return {
        "format": "cvxadp-estimate",
        "version": 1,
        "model": model_to_dict(est.model),
        "preprocess": {
            "matrix": est.preprocess.matrix.tolist(),
            "offset": est.preprocess.offset.tolist(),
            "output_scale": float(est.preprocess.output_scale),
        },
        "final_train_risk": float(est.final_train_risk),
        "flags": list(est.flags),
    }


def estimate_from_dict(doc):
    if doc.get("format") != "cvxadp-estimate":
        raise ValueError("not an estimate document")
    model, _ = model_from_dict(doc["model"])
    p = doc["preprocess"]
    amap = AffineMap(np.array(p["matrix"], dtype=np.float64),
                     np.array(p["offset"], dtype=np.float64),
                     float(p["output_scale"]))
    return TrainedEstimate(model=model, preprocess=amap,
                           final_train_risk=float(doc["final_train_risk"]),
                           flags=tuple(doc.get("flags", ())))


def save_estimate(est, path):
    with open(path, "w") as fh:
        json.dump(estimate_to_dict(est), fh, indent=2)
        fh.write("\n")


def load_estimate(path):
    with open(path) as fh:
        return estimate_from_dict(json.load(fh))
