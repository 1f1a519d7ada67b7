"""Polynomial zero-noise extrapolation with code-aware fitting families.

With error correction of effective distance d the leading noise contribution
is r^ceil(d/2), so the K-th order fit uses
    y(r) = c + sum_{k=m}^{m+K-1} a_k r^k,   m = ceil(d/2)
(d = 1 recovers conventional ZNE with the linear term first). The
extrapolated value is a linear combination sum_k b_k y(r_k) where b is the
first row of the inverse of the Vandermonde-like design matrix; it is
computed by a pivoted solve rather than the adjugate so that sum b_k = 1
holds to machine precision.

The sampling overhead eta compares the variance of the extrapolated value,
with shots spread over the design points by importance |b_k|, against
spending the whole budget at r0 = 1; Pauli observables give the one-shot
variance 1 - y^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "ZneError", "DegenerateDesignError", "DataPoint", "ZneResult", "ScanEntry",
    "extrap_coeffs", "extrapolate", "bias", "sampling_overhead",
    "sampling_overhead_measured", "scan_delta_eta",
]


class ZneError(ValueError):
    pass


class DegenerateDesignError(ZneError):
    """Duplicate design points or a singular design matrix."""


@dataclass(frozen=True)
class DataPoint:
    r: float
    value: float
    stderr: float = 0.0
    shots: int = 0


@dataclass(frozen=True)
class ZneResult:
    value: float
    coeffs: tuple[float, ...]
    bias: float
    overhead: float
    d: int
    K: int
    rs: tuple[float, ...]


def _design_matrix(rs, d: int) -> np.ndarray:
    m = math.ceil(d / 2)
    k = len(rs) - 1
    v = np.empty((k + 1, k + 1))
    v[:, 0] = 1.0
    for j in range(1, k + 1):
        v[:, j] = np.asarray(rs, dtype=float) ** (m + j - 1)
    return v


def extrap_coeffs(rs, d: int, K: int | None = None) -> np.ndarray:
    """Weights b with sum_k b_k y(r_k) = the fitted constant term."""
    rs = tuple(float(r) for r in rs)
    if K is not None and len(rs) != K + 1:
        raise ZneError(f"need K+1={K + 1} design points, got {len(rs)}")
    if any(r <= 0 for r in rs):
        raise ZneError("design points must be positive")
    if len(set(rs)) != len(rs):
        raise DegenerateDesignError("duplicate design points")
    if d < 1:
        raise ZneError("effective distance must be >= 1")
    v = _design_matrix(rs, d)
    e0 = np.zeros(len(rs))
    e0[0] = 1.0
    try:
        b = np.linalg.solve(v.T, e0)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError(str(exc)) from None
    if not np.all(np.isfinite(b)):
        raise DegenerateDesignError("singular design matrix")
    return b


def extrapolate(points, d: int, K: int | None = None) -> float:
    """Zero-noise value from K+1 data points (must include r0 = 1)."""
    pts = sorted(points, key=lambda p: p.r)
    if not any(abs(p.r - 1.0) < 1e-12 for p in pts):
        raise ZneError("extrapolation input must include r0 = 1")
    b = extrap_coeffs([p.r for p in pts], d, K)
    return float(np.dot(b, [p.value for p in pts]))


def bias(value: float, ideal: float) -> float:
    return abs(value - ideal)


def sampling_overhead(values, b, n_total: int | None = None) -> float:
    """Variance ratio of the extrapolated estimate to a raw-only estimate.

    Importance allocation N_k = |b_k| / sum|b| * N_total; the result is
    independent of N_total (it cancels), which is asserted when a budget is
    given. values[0] must belong to r0.
    """
    values = np.asarray(values, dtype=float)
    b = np.asarray(b, dtype=float)
    if values.shape != b.shape:
        raise ZneError("values and coefficients differ in length")
    if np.any(np.abs(values) > 1 + 1e-9):
        raise ZneError("Pauli observable values must lie in [-1, 1]")
    var1 = np.clip(1.0 - values ** 2, 0.0, None)   # one-shot variance
    raw = var1[0]
    babs = np.abs(b)
    eta = float(babs.sum() * np.dot(babs, var1)) / raw if raw > 0 else math.inf
    if n_total is not None and raw > 0:
        nk = babs / babs.sum() * n_total
        with np.errstate(divide="ignore", invalid="ignore"):
            sig = np.where(nk > 0, var1 / np.where(nk > 0, nk, 1.0), 0.0)
        explicit = float(np.dot(b ** 2, sig) / (raw / n_total))
        if not math.isclose(explicit, eta, rel_tol=1e-9, abs_tol=1e-12):
            raise AssertionError("overhead failed N_total-invariance")
    return eta


def sampling_overhead_measured(stderrs, shots, b) -> float:
    """Diagnostic overhead using measured variances instead of 1 - y^2."""
    b = np.asarray(b, dtype=float)
    var1 = np.asarray(stderrs, dtype=float) ** 2 * np.asarray(shots, dtype=float)
    if var1[0] <= 0:
        return math.inf
    babs = np.abs(b)
    return float(babs.sum() * np.dot(babs, var1) / var1[0])


@dataclass(frozen=True)
class ScanEntry:
    d: int
    K: int
    rs: tuple[float, ...]
    delta: float
    eta: float
    delta0: float


def scan_delta_eta(points, d: int, K: int, ideal: float) -> list[ScanEntry]:
    """All size-K choices of amplified points (r0 = 1 always included)."""
    pts = sorted(points, key=lambda p: p.r)
    base = [p for p in pts if abs(p.r - 1.0) < 1e-12]
    if not base:
        raise ZneError("scan grid must contain r = 1")
    p0 = base[0]
    rest = [p for p in pts if p is not p0]
    delta0 = bias(p0.value, ideal)
    out = []
    for subset in combinations(rest, K):
        design = (p0, *subset)
        rs = tuple(p.r for p in design)
        b = extrap_coeffs(rs, d)
        value = float(np.dot(b, [p.value for p in design]))
        eta = sampling_overhead([p.value for p in design], b)
        out.append(ScanEntry(d, K, rs, bias(value, ideal), eta, delta0))
    return out
