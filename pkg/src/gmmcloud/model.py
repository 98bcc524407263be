"""Core mixture-model types and density evaluation for 3D point clouds.

Shapes are modeled as Gaussian mixtures over R^3. This module holds the
shared value types (point clouds, mixture components, mixtures, and
AIC-weighted mixture ensembles) together with the density and
log-likelihood routines everything else builds on.

All types are immutable after construction; their arrays are copied in
and marked read-only. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

LOG_TWO_PI = math.log(2.0 * math.pi)

# Tolerances used by constructor validation.
WEIGHT_SUM_TOL = 1e-9
SYMMETRY_TOL = 1e-12

# Fallback eigenvalue floor when the data covariance itself is degenerate
# (for example a cloud of identical points), where the scale-aware floor
# would collapse to zero.
ABSOLUTE_COV_FLOOR = 1e-12


class DegenerateCovarianceError(ValueError):
    """A covariance matrix is not symmetric positive definite."""


def _frozen_array(values, shape: tuple[int, ...] | None, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PointCloud:
    """A non-empty set of 3D points, optionally tagged with a class label."""

    points: np.ndarray
    label: str | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must be an (N, 3) array with N >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted trivariate Gaussian: weight, mean, SPD covariance."""

    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        w = float(self.weight)
        if not (w >= 0.0 and math.isfinite(w)):
            raise ValueError(f"component weight must be finite and >= 0, got {self.weight}")
        mean = _frozen_array(self.mean, (3,), "mean")
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError(f"covariance must be 3x3, got shape {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise DegenerateCovarianceError("covariance must be finite")
        asym = float(np.max(np.abs(cov - cov.T)))
        if asym > SYMMETRY_TOL:
            raise DegenerateCovarianceError(
                f"covariance asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )
        cov = 0.5 * (cov + cov.T)
        smallest = float(np.linalg.eigvalsh(cov)[0])
        if smallest <= 0.0:
            raise DegenerateCovarianceError(
                f"degenerate covariance: smallest eigenvalue {smallest:.6e}"
            )
        cov.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class Gmm:
    """A Gaussian mixture. Component weights sum to one."""

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("a mixture needs at least one component")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def covariances(self) -> np.ndarray:
        return np.array([c.covariance for c in self.components])


@dataclass(frozen=True)
class EnsembleMember:
    """One mixture in an ensemble with its selection probability p."""

    weight: float
    model: Gmm

    def __post_init__(self):
        w = float(self.weight)
        if not (w > 0.0 and math.isfinite(w)):
            raise ValueError(f"member weight must be finite and > 0, got {self.weight}")
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class GmmEnsemble:
    """AIC-weighted collection of mixtures with distinct component counts."""

    members: tuple[EnsembleMember, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 1:
            raise ValueError("an ensemble needs at least one member")
        total = math.fsum(m.weight for m in members)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"member weights sum to {total!r}, expected 1")
        ks = [m.model.k for m in members]
        if len(set(ks)) != len(ks):
            raise ValueError(f"member component counts must be distinct, got {ks}")
        object.__setattr__(self, "members", members)

    @classmethod
    def single(cls, model: Gmm) -> "GmmEnsemble":
        return cls((EnsembleMember(1.0, model),))


def covariance_floor(points: np.ndarray) -> float:
    """Scale-aware eigenvalue floor for fitted covariances.

    One millionth of the mean per-axis variance of the data, so the floor
    tracks the units of the cloud. Degenerate data falls back to an
    absolute floor.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return ABSOLUTE_COV_FLOOR
    var = pts.var(axis=0)
    eps = 1e-6 * float(var.sum()) / 3.0
    if not (eps > 0.0 and math.isfinite(eps)):
        return ABSOLUTE_COV_FLOOR
    return eps


def floor_spd(cov: np.ndarray, eps: float) -> np.ndarray:
    """Clamp the eigenvalues of a symmetric matrix at eps and resymmetrize."""
    sym = 0.5 * (cov + cov.T)
    lam, q = np.linalg.eigh(sym)
    lam = np.maximum(lam, eps)
    out = (q * lam) @ q.T
    return 0.5 * (out + out.T)


def gaussian_log_density(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Log density of N(mean, cov) at each row of points, shape (N,).

    Evaluated through the Cholesky factor so the quadratic form and the
    determinant stay stable for small covariances.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(0.5 * (cov + cov.T))[0])
        raise DegenerateCovarianceError(
            f"degenerate covariance: smallest eigenvalue {smallest:.6e}"
        ) from None
    diff = pts - np.asarray(mean, dtype=float)
    y = solve_triangular(chol, diff.T, lower=True)
    maha = np.einsum("ij,ij->j", y, y)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (3.0 * LOG_TWO_PI + log_det + maha)


def gaussian_density(x: np.ndarray, component: GaussianComponent) -> float:
    """Trivariate normal density of a single component at a single point."""
    logd = gaussian_log_density(np.asarray(x, dtype=float).reshape(1, 3),
                                component.mean, component.covariance)
    return float(np.exp(logd[0]))


def weighted_log_densities(points: np.ndarray, model: Gmm) -> np.ndarray:
    """(N, K) matrix of log(w_j) + log f_j(x_i). Zero weights map to -inf."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cols = np.empty((pts.shape[0], model.k))
    for j, comp in enumerate(model.components):
        if comp.weight > 0.0:
            cols[:, j] = math.log(comp.weight) + gaussian_log_density(
                pts, comp.mean, comp.covariance)
        else:
            cols[:, j] = -np.inf
    return cols


def log_sum_exp_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp that maps all -inf rows to -inf without warnings."""
    peak = np.max(matrix, axis=1)
    finite = np.isfinite(peak)
    out = np.full(matrix.shape[0], -np.inf)
    if np.any(finite):
        shifted = matrix[finite] - peak[finite, None]
        out[finite] = peak[finite] + np.log(np.sum(np.exp(shifted), axis=1))
    return out


def gmm_log_density(points: np.ndarray, model: Gmm) -> np.ndarray:
    """Log mixture density at each row of points, shape (N,)."""
    return log_sum_exp_rows(weighted_log_densities(points, model))


def ensemble_log_density(points: np.ndarray, ensemble: GmmEnsemble) -> np.ndarray:
    """Log density of the ensemble mixture sum_k p_k f_k at each point."""
    cols = np.column_stack([
        math.log(m.weight) + gmm_log_density(points, m.model) for m in ensemble.members
    ])
    return log_sum_exp_rows(cols)


def gmm_density(x: np.ndarray, model: Gmm) -> float:
    """Mixture density at a single point: sum_j w_j f_j(x)."""
    return float(math.fsum(
        c.weight * gaussian_density(x, c) for c in model.components
    ))


def gmm_log_likelihood(cloud: PointCloud, model: Gmm) -> float:
    """Total log-likelihood of a cloud under a mixture.

    Per-point contributions go through log-sum-exp, so far-outlying
    points underflow to -inf only when the density is exactly zero in
    exact arithmetic.
    """
    return float(np.sum(gmm_log_density(cloud.points, model)))
