"""Max-affine models: evaluation, induced partitions, ridge cell fits.

A max-affine function is f(x) = max_k (a_k @ x + b_k).  These are the
convex-regression primitives everything else builds on: partition a dataset
by which hyperplane attains the max, refit each cell by ridge least squares,
and compose a fitted model with an affine change of coordinates.
"""

import csv
import json
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from . import kernels


def _finite_matrix(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("%s must be 2-D" % name)
    if not np.all(np.isfinite(a)):
        raise ValueError("%s has non-finite entries" % name)
    return a


def _finite_vector(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("%s must be 1-D" % name)
    if not np.all(np.isfinite(a)):
        raise ValueError("%s has non-finite entries" % name)
    return a


@dataclass(frozen=True)
class Dataset:
    """Regression data: points (n, d) and targets (n,)."""

    points: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = _finite_matrix(self.points, "points")
        y = _finite_vector(self.targets, "targets")
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one point")
        if X.shape[1] < 1:
            raise ValueError("points need at least one coordinate")
        if X.shape[0] != y.shape[0]:
            raise ValueError("%d points but %d targets" % (X.shape[0], y.shape[0]))
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def subset(self, idx):
        return Dataset(self.points[idx], self.targets[idx])


@dataclass(frozen=True)
class Hyperplane:
    slope: np.ndarray
    intercept: float

    def __post_init__(self):
        s = _finite_vector(self.slope, "slope")
        b = float(self.intercept)
        if not np.isfinite(b):
            raise ValueError("intercept must be finite")
        object.__setattr__(self, "slope", s)
        object.__setattr__(self, "intercept", b)


@dataclass(frozen=True)
class MaxAffineModel:
    """f(x) = max_k (slopes[k] @ x + intercepts[k]); K >= 1 hyperplanes."""

    slopes: np.ndarray      # (K, d)
    intercepts: np.ndarray  # (K,)

    def __post_init__(self):
        A = _finite_matrix(self.slopes, "slopes")
        b = _finite_vector(self.intercepts, "intercepts")
        if A.shape[0] < 1:
            raise ValueError("model needs at least one hyperplane")
        if A.shape[0] != b.shape[0]:
            raise ValueError("%d slopes but %d intercepts" % (A.shape[0], b.shape[0]))
        object.__setattr__(self, "slopes", A)
        object.__setattr__(self, "intercepts", b)

    @classmethod
    def from_hyperplanes(cls, hyperplanes):
        hs = list(hyperplanes)
        if not hs:
            raise ValueError("model needs at least one hyperplane")
        return cls(np.stack([h.slope for h in hs]),
                   np.array([h.intercept for h in hs]))

    @property
    def hyperplanes(self):
        return tuple(Hyperplane(self.slopes[k], float(self.intercepts[k]))
                     for k in range(self.K))

    @property
    def K(self):
        return self.slopes.shape[0]

    @property
    def d(self):
        return self.slopes.shape[1]

    def evaluate(self, X):
        """Vectorized evaluation on an (n, d) array; returns (n,)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise ValueError("points have dimension %d, model expects %d"
                             % (X.shape[1], self.d))
        vals, _ = kernels.max_affine_argmax(self.slopes, self.intercepts, X)
        return float(vals[0]) if squeeze else vals


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint nonempty index cells over a dataset."""

    cells: Tuple[np.ndarray, ...]

    def __post_init__(self):
        cells = tuple(np.ascontiguousarray(c, dtype=np.int64) for c in self.cells)
        if not cells:
            raise ValueError("partition needs at least one cell")
        seen = set()
        for c in cells:
            if c.size == 0:
                raise ValueError("empty cell")
            s = set(c.tolist())
            if len(s) != c.size or s & seen:
                raise ValueError("cells must be disjoint without repeats")
            seen |= s
        object.__setattr__(self, "cells", cells)

    @property
    def K(self):
        return len(self.cells)

    @property
    def size(self):
        return sum(c.size for c in self.cells)

    @property
    def min_cell(self):
        return min(c.size for c in self.cells)

    def check_covers(self, n):
        if self.size != n:
            raise ValueError("partition covers %d of %d indices" % (self.size, n))

    @classmethod
    def trivial(cls, n):
        return cls((np.arange(n, dtype=np.int64),))


@dataclass(frozen=True)
class AffineMap:
    """x_raw -> matrix @ (x_raw - offset), with a positive output scale.

    Carries the preprocessing transform so that a model fitted in transformed
    coordinates can be expressed over raw ones (compose_with_affine).
    """

    matrix: np.ndarray   # (d_out, d_raw)
    offset: np.ndarray   # (d_raw,)
    output_scale: float = 1.0

    def __post_init__(self):
        M = _finite_matrix(self.matrix, "matrix")
        mu = _finite_vector(self.offset, "offset")
        s = float(self.output_scale)
        if M.shape[1] != mu.shape[0]:
            raise ValueError("matrix has %d columns but offset has %d"
                             % (M.shape[1], mu.shape[0]))
        if not (np.isfinite(s) and s > 0):
            raise ValueError("output_scale must be positive")
        if M.shape[0] > 0 and np.linalg.matrix_rank(M) < M.shape[0]:
            raise ValueError("matrix must have full row rank")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "offset", mu)
        object.__setattr__(self, "output_scale", s)

    @property
    def d_raw(self):
        return self.matrix.shape[1]

    @property
    def d_out(self):
        return self.matrix.shape[0]

    def apply(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.matrix @ (X - self.offset)
        return (X - self.offset) @ self.matrix.T

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), np.zeros(d), 1.0)


def eval(model, x):  # mirrors the mathematical name; shadows nothing we use
    """Evaluate the max-affine function at a single point."""
    return model.evaluate(x)


def empirical_risk(model, data):
    """Mean squared error of the model on the dataset."""
    preds = model.evaluate(data.points)
    resid = preds - data.targets
    return float(resid @ resid) / data.n


def induced_partition(model, data):
    """Assign each point to the lowest-index hyperplane attaining the max.

    Hyperplanes that win no points contribute no cell, so the returned
    partition may have fewer cells than the model has hyperplanes.
    """
    X = data.points
    if X.shape[1] != model.d:
        raise ValueError("points have dimension %d, model expects %d"
                         % (X.shape[1], model.d))
    _, idx = kernels.max_affine_argmax(model.slopes, model.intercepts, X)
    cells = []
    for k in range(model.K):
        members = np.flatnonzero(idx == k)
        if members.size:
            cells.append(members.astype(np.int64))
    return Partition(tuple(cells))


def _ridge_cell(X, y, beta):
    # a = (sum dd^T + beta I)^-1 sum d y  with d = x - cell mean
    mu = X.mean(axis=0)
    D = X - mu
    G = D.T @ D
    G[np.diag_indices_from(G)] += beta
    rhs = D.T @ y
    cho = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    a = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
    b = float(np.mean(y - X @ a))
    return a, b


def fit_partition(data, partition, beta=1e-6):
    """Ridge least-squares fit of one hyperplane per partition cell.

    The ridge term beta keeps every cell system positive definite, so cells
    with fewer than d+1 points still produce a hyperplane.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    partition.check_covers(data.n)
    X, y = data.points, data.targets
    slopes = np.empty((partition.K, data.d))
    intercepts = np.empty(partition.K)
    for k, cell in enumerate(partition.cells):
        a, b = _ridge_cell(X[cell], y[cell], beta)
        slopes[k] = a
        intercepts[k] = b
    return MaxAffineModel(slopes, intercepts)


def compose_with_affine(model, amap):
    """Express a model fitted in mapped coordinates over raw coordinates.

    Returns g with g(x) = output_scale * f(matrix @ (x - offset)), which is
    again max-affine: slopes pick up the matrix, intercepts the offset.
    """
    if model.d != amap.d_out:
        raise ValueError("model dimension %d != map output dimension %d"
                         % (model.d, amap.d_out))
    s = amap.output_scale
    slopes = s * (model.slopes @ amap.matrix)
    shift = amap.matrix @ amap.offset
    intercepts = s * (model.intercepts - model.slopes @ shift)
    return MaxAffineModel(slopes, intercepts)


# ---------------------------------------------------------------------------
# serialization

def model_to_dict(model, affine_map=None):
    doc = {
        "format": "cvxadp-model",
        "version": 1,
        "hyperplanes": [
            {"slope": model.slopes[k].tolist(),
             "intercept": float(model.intercepts[k])}
            for k in range(model.K)
        ],
        "affine_map": None,
    }
    if affine_map is not None:
        doc["affine_map"] = {
            "matrix": affine_map.matrix.tolist(),
            "offset": affine_map.offset.tolist(),
            "output_scale": float(affine_map.output_scale),
        }
    return doc


def model_from_dict(doc):
    if doc.get("format") != "cvxadp-model":
        raise ValueError("not a model document")
    hs = doc["hyperplanes"]
    model = MaxAffineModel(np.array([h["slope"] for h in hs], dtype=np.float64),
                           np.array([h["intercept"] for h in hs], dtype=np.float64))
    amap = None
    if doc.get("affine_map") is not None:
        a = doc["affine_map"]
        amap = AffineMap(np.array(a["matrix"], dtype=np.float64),
                         np.array(a["offset"], dtype=np.float64),
                         float(a["output_scale"]))
    return model, amap


def save_model(model, path, affine_map=None):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, affine_map), fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Load a model JSON file; returns (model, affine_map_or_None)."""
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def load_dataset(path, header=False):
    """Read a CSV of d feature columns followed by one target column."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row or (i == 0 and header):
                continue
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError("no data rows in %s" % path)
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape[1] < 2:
        raise ValueError("need at least one feature column and one target column")
    return Dataset(arr[:, :-1], arr[:, -1])
