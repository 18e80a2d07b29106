"""Experiment families: constrained elastic net and generalized Heron.

Both are hierarchical problems: minimize a sum of proximable terms over the
minimizers of a smooth constraint potential ``g``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import FormatError, ParameterError, ShapeError
from .operators import (box_distance_gradient, dist_ball_block, l1_block,
                        least_squares_block, make_rng, quadratic_penalty_gradient,
                        rank_one_quadratic_block, scaled_sq_norm_block, zero_cocoercive)
from .solver import GfbpProblem

__all__ = ["ElasticNetConfig", "HeronConfig", "build_elastic_net", "build_heron",
           "gen_regression_data", "gen_hilbert_problem", "gen_heron_instance",
           "load_csv_matrix", "load_csv_vector"]


@dataclass
class ElasticNetConfig:
    A: np.ndarray
    b: np.ndarray
    gamma: float = 0.5
    split: bool = False
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(f"elastic-net parameter gamma must lie in [0, 1], got {self.gamma}")
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise ShapeError(f"design matrix {self.A.shape} and response {self.b.shape} are incompatible")
        if self.lo > self.hi:
            raise ParameterError("box lower bound exceeds upper bound")


@dataclass
class HeronConfig:
    centers: List[np.ndarray]
    A: np.ndarray
    radii: List[float] = field(default_factory=list)

    def __post_init__(self):
        self.centers = [np.asarray(c, dtype=float) for c in self.centers]
        self.A = np.asarray(self.A, dtype=float)
        if not self.centers:
            raise ParameterError("at least one target set is required")
        if not self.radii:
            self.radii = [1.0] * len(self.centers)
        n = self.centers[0].shape[0]
        if any(c.shape != (n,) for c in self.centers):
            raise ShapeError("all centers must have the same dimension")
        if len(self.radii) != len(self.centers):
            raise ShapeError("need one radius per center")
        if any(not r > 0 for r in self.radii):
            raise ParameterError("radii must be positive")
        if self.A.shape != (n, n):
            raise ShapeError(f"constraint matrix must be {n}x{n}, got {self.A.shape}")

    @property
    def dim(self):
        return self.centers[0].shape[0]


def build_elastic_net(cfg):
    """Constrained elastic net over ``argmin 0.5*dist^2(., [lo, hi]^n)``.

    Blocks are ``[0.5||Ax-b||^2]`` (or one rank-one term per row when
    ``cfg.split``), then ``gamma*||x||_1``, then ``(1-gamma)*||x||^2`` last so
    that the strongly convex term closes each sweep.
    """
    A, b, gamma = cfg.A, cfg.b, cfg.gamma
    m, n = A.shape
    if cfg.split:
        data_blocks = [rank_one_quadratic_block(A[i], b[i], label=f"row{i + 1}") for i in range(m)]
    else:
        data_blocks = [least_squares_block(A, b)]
    blocks = data_blocks + [l1_block(gamma), scaled_sq_norm_block(1.0 - gamma)]
    penalty = box_distance_gradient(cfg.lo, cfg.hi)

    def objective(x):
        res = A @ x - b
        return 0.5 * float(res @ res) + gamma * float(np.abs(x).sum()) + (1.0 - gamma) * float(x @ x)

    return GfbpProblem(blocks=blocks, dim=n, smooth=zero_cocoercive(), penalty=penalty,
                       objective=objective, constraint_value=penalty.potential,
                       name="elastic-net-split" if cfg.split else "elastic-net")


def build_heron(cfg):
    """Sum of distances to the target balls plus ``||x||^2`` over ``argmin 0.5||Ax||^2``."""
    if not np.any(cfg.A):
        raise ParameterError("constraint matrix is identically zero")
    blocks = [dist_ball_block(c, r, label=f"ball{i + 1}")
              for i, (c, r) in enumerate(zip(cfg.centers, cfg.radii))]
    blocks.append(scaled_sq_norm_block(1.0))
    penalty = quadratic_penalty_gradient(cfg.A)

    def objective(x):
        return sum(blk.value(x) for blk in blocks)

    return GfbpProblem(blocks=blocks, dim=cfg.dim, smooth=zero_cocoercive(), penalty=penalty,
                       objective=objective, constraint_value=penalty.potential, name="heron")


def gen_regression_data(m, n, seed, nonzero_frac=0.5):
    """Synthetic linear model ``b = A x0 + noise``.

    ``A`` is standard normal, ``x0`` has ``ceil(nonzero_frac*n)`` standard
    normal entries at random positions, and the noise has per-component
    standard deviation ``||A x0||``.

    Returns
    -------
    A, b, x0 : ndarray
    """
    if m < 1 or n < 1:
        raise ParameterError(f"sizes must be positive, got m={m}, n={n}")
    if not 0.0 <= nonzero_frac <= 1.0:
        raise ParameterError(f"nonzero_frac must lie in [0, 1], got {nonzero_frac}")
    rng = make_rng(seed)
    A = rng.standard_normal((m, n))
    nnz = math.ceil(nonzero_frac * n)
    x0 = np.zeros(n)
    support = rng.choice(n, size=nnz, replace=False)
    x0[support] = rng.standard_normal(nnz)
    signal = A @ x0
    noise = rng.normal(0.0, np.linalg.norm(signal), size=m)
    return A, signal + noise, x0


def gen_hilbert_problem(m):
    """Hilbert-type design ``A[i, j] = 1/(i+j-1)`` with ``n = 2**m`` and ``b_i = -sum_j A[i, j]``."""
    if m < 1:
        raise ParameterError(f"m must be positive, got {m}")
    n = 2 ** m
    i = np.arange(1, m + 1, dtype=float)[:, None]
    j = np.arange(1, n + 1, dtype=float)[None, :]
    A = 1.0 / (i + j - 1.0)
    return A, -A.sum(axis=1)


def gen_heron_instance(n, m, seed):
    """``m`` unit balls centered uniformly in ``(-n^2, n^2)^n``; ``A`` uniform in ``(-10, 10)``."""
    if n < 1 or m < 1:
        raise ParameterError(f"sizes must be positive, got n={n}, m={m}")
    rng = make_rng(seed)
    centers = rng.uniform(-n ** 2, n ** 2, size=(m, n))
    A = rng.uniform(-10.0, 10.0, size=(n, n))
    return HeronConfig(centers=list(centers), A=A, radii=[1.0] * m)


# -- CSV ingestion ------------------------------------------------------------------

def _read_numeric_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path} is empty")

    def is_number(cell):
        try:
            float(cell)
        except ValueError:
            return False
        return True

    first = 1
    if not all(is_number(c) for c in rows[0]):
        rows = rows[1:]  # header
        first = 2
        if not rows:
            raise FormatError(f"{path} has a header but no data")

    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"ragged CSV in {path}: expected {width} cells, got {len(row)}",
                              row=i + first)
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise FormatError(f"non-numeric cell {cell!r} in {path}",
                                  row=i + first, column=j + 1) from None
    return data


def load_csv_matrix(path):
    """Dense matrix from a rectangular numeric CSV (rows are observations)."""
    return _read_numeric_rows(path)


def load_csv_vector(path):
    """Vector from a single-column or single-row numeric CSV."""
    data = _read_numeric_rows(path)
    if data.shape[1] == 1:
        return data[:, 0]
    if data.shape[0] == 1:
        return data[0]
    raise FormatError(f"{path} holds a {data.shape[0]}x{data.shape[1]} table, expected a vector")
