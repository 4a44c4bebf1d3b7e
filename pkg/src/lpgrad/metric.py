"""Tensor metric of non-independent variables and its generalized inverse.

For dependent inputs the gradient of interest is G^{-1} grad_f where G
is the (symmetric PSD) tensor metric; for independent inputs G is the
identity and everything reduces to the plain gradient. The norms of
|G^{-1}| 1 stored here feed the bias-bound calculators.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "TensorMetric",
    "identity_metric",
    "from_matrix",
    "exp_corr_metric",
    "apply_inverse",
    "load_matrix",
]


@dataclass(frozen=True)
class TensorMetric:
    """A metric G with its generalized inverse and bound norms.

    ``g`` / ``ginv`` are None for the identity marker, which skips all
    matrix work in apply_inverse.
    """

    dim: int
    g: np.ndarray | None
    ginv: np.ndarray | None
    abs_ginv_ones_l1: float
    abs_ginv_ones_l2: float
    spectral_norm_ginv: float

    @property
    def is_identity(self) -> bool:
        return self.g is None

    @property
    def tag(self) -> str:
        return "identity" if self.is_identity else "matrix"


def identity_metric(d: int) -> TensorMetric:
    """The identity marker metric for independent variables."""
    if d < 1:
        raise DomainError("dimension must be positive")
    return TensorMetric(
        dim=d,
        g=None,
        ginv=None,
        abs_ginv_ones_l1=float(d),
        abs_ginv_ones_l2=math.sqrt(d),
        spectral_norm_ginv=1.0,
    )


def from_matrix(g) -> TensorMetric:
    """Build a metric from a symmetric PSD matrix.

    The generalized inverse comes from the symmetric eigendecomposition
    with eigenvalues above tau = d * eps * lambda_max inverted and the
    rest zeroed (Moore-Penrose on the retained spectrum).
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DomainError(f"metric must be a square matrix, got shape {g.shape}")
    d = g.shape[0]
    scale = max(1.0, float(np.abs(g).max()))
    if np.abs(g - g.T).max() > 1e-8 * scale:
        raise DomainError("metric matrix must be symmetric (tolerance 1e-8)")
    g = 0.5 * (g + g.T)
    w, v = np.linalg.eigh(g)
    tau = d * np.finfo(float).eps * max(np.abs(w).max(), np.finfo(float).tiny)
    keep = w > tau
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    ginv = (v * inv_w) @ v.T
    ginv = 0.5 * (ginv + ginv.T)
    row = np.abs(ginv).sum(axis=1)
    return TensorMetric(
        dim=d,
        g=g,
        ginv=ginv,
        abs_ginv_ones_l1=float(row.sum()),
        abs_ginv_ones_l2=float(np.linalg.norm(row)),
        spectral_norm_ginv=float(inv_w.max(initial=0.0)),
    )


def exp_corr_metric(d: int, rho: float) -> TensorMetric:
    """Metric G = C C for the correlation matrix C_ij = rho^|i-j|."""
    if d < 1:
        raise DomainError("dimension must be positive")
    if not -1.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (-1, 1), got {rho}")
    idx = np.arange(d)
    corr = rho ** np.abs(idx[:, None] - idx[None, :])
    return from_matrix(corr @ corr)


def apply_inverse(metric: TensorMetric, v) -> np.ndarray:
    """G^{-1} v; the identity marker short-circuits to a copy of v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (metric.dim,):
        raise DomainError(f"expected a vector of length {metric.dim}, got shape {v.shape}")
    if metric.is_identity:
        return v.copy()
    return metric.ginv @ v


def load_matrix(path) -> np.ndarray:
    """Read a dense d x d matrix from a CSV (header optional) or JSON file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            m = np.asarray(json.load(fh), dtype=float)
    else:
        skip = 0
        with open(path) as fh:
            first = fh.readline()
        try:
            [float(tok) for tok in first.replace(",", " ").split()]
        except ValueError:
            skip = 1
        m = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"matrix file {path} is not square: shape {m.shape}")
    return m
