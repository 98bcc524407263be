"""Closed-form geodesics between mixtures on a product manifold.

A K-component mixture maps to a point on S^(K-1) x R^(3xK) x SPD(3)^K:
the square roots of the weights live on the unit sphere, the means in a
flat Euclidean slot, and each covariance on the SPD manifold with the
affine-invariant metric. The geodesic between two mixtures is the slerp
on the sphere slot, the straight line on the mean slot, and

    S1^(1/2) (S1^(-1/2) S2 S1^(-1/2))^t S1^(1/2)

on every covariance slot. Mixtures of unequal size are first reduced to
a common K by moment-preserving merges and then aligned by an optimal
component matching on mean distances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .em import FitConfig
from .model import (
    DegenerateCovarianceError,
    GaussianComponent,
    Gmm,
    GmmEnsemble,
    PointCloud,
)
from .sampling import RngStream, generate_point_cloud
from .selection import build_ensemble, default_candidate_ks

SPHERE_NORM_TOL = 1e-12
COLINEAR_THETA = 1e-8
EXHAUSTIVE_MATCH_LIMIT = 8

DEFAULT_TS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class ProductPoint:
    """A mixture as a point on the weight-sphere x means x SPD product.

    sqrt_weights: (K,) unit vector with non-negative entries.
    means: (3, K) matrix, one column per component.
    covariances: (K, 3, 3) stack of SPD matrices.
    """

    sqrt_weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        sq = np.array(self.sqrt_weights, dtype=float)
        if sq.ndim != 1 or sq.size < 1:
            raise ValueError(f"sqrt_weights must be a non-empty vector, got shape {sq.shape}")
        if np.any(sq < 0.0) or not np.all(np.isfinite(sq)):
            raise ValueError("sqrt_weights entries must be finite and >= 0")
        norm = float(np.linalg.norm(sq))
        if abs(norm - 1.0) > SPHERE_NORM_TOL:
            raise ValueError(f"sqrt_weights norm is {norm!r}, expected 1")
        k = sq.size
        means = np.array(self.means, dtype=float)
        if means.shape != (3, k):
            raise ValueError(f"means must have shape (3, {k}), got {means.shape}")
        covs = np.array(self.covariances, dtype=float)
        if covs.shape != (k, 3, 3):
            raise ValueError(f"covariances must have shape ({k}, 3, 3), got {covs.shape}")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(covs))):
            raise ValueError("means and covariances must be finite")
        for j in range(k):
            covs[j] = _checked_spd(covs[j])
        for arr in (sq, means, covs):
            arr.setflags(write=False)
        object.__setattr__(self, "sqrt_weights", sq)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def k(self) -> int:
        return self.sqrt_weights.size


def _checked_spd(mat: np.ndarray) -> np.ndarray:
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > 1e-12:
        raise DegenerateCovarianceError(f"matrix asymmetry {asym:.3e} exceeds 1e-12")
    sym = 0.5 * (mat + mat.T)
    smallest = float(np.linalg.eigvalsh(sym)[0])
    if smallest <= 0.0:
        raise DegenerateCovarianceError(
            f"matrix is not SPD: smallest eigenvalue {smallest:.6e}")
    return sym


def gmm_to_product_point(model: Gmm) -> ProductPoint:
    """Lift a mixture onto the product manifold."""
    sq = np.sqrt(model.weights)
    sq = sq / np.linalg.norm(sq)
    return ProductPoint(sq, model.means.T, model.covariances)


def product_point_to_gmm(point: ProductPoint) -> Gmm:
    """Project back to a mixture. Weights are the squared sphere entries."""
    w = point.sqrt_weights ** 2
    w = w / w.sum()
    return Gmm(tuple(
        GaussianComponent(w[j], point.means[:, j], point.covariances[j])
        for j in range(point.k)
    ))


def _merge_pair(w1, m1, s1, w2, m2, s2):
    """Moment-preserving merge of two weighted components."""
    w = w1 + w2
    if w <= 0.0:
        return 0.0, 0.5 * (m1 + m2), 0.5 * (s1 + s2)
    a, b = w1 / w, w2 / w
    mean = a * m1 + b * m2
    d = m1 - m2
    cov = a * s1 + b * s2 + a * b * np.outer(d, d)
    return w, mean, cov


def _merge_cost(w1, m1, w2, m2) -> float:
    """Trace increase of the within-mixture covariance when merging."""
    w = w1 + w2
    if w <= 0.0:
        return 0.0
    return float(w1 * w2 / w * np.sum((m1 - m2) ** 2))


def project_to_k(model: Gmm, k_target: int) -> Gmm:
    """Reduce a mixture to k_target components by greedy pairwise merges.

    Each step merges the pair whose moment-preserving merge least
    increases the within-mixture covariance, so the overall mixture mean
    and covariance are preserved throughout.
    """
    if k_target < 1:
        raise ValueError(f"target component count must be >= 1, got {k_target}")
    if k_target > model.k:
        raise ValueError(f"cannot project K={model.k} up to K={k_target}")
    comps = [(c.weight, c.mean.copy(), c.covariance.copy()) for c in model.components]
    while len(comps) > k_target:
        best = None
        for i, j in itertools.combinations(range(len(comps)), 2):
            cost = _merge_cost(comps[i][0], comps[i][1], comps[j][0], comps[j][1])
            if best is None or cost < best[0]:
                best = (cost, i, j)
        _, i, j = best
        comps[i] = _merge_pair(*comps[i], *comps[j])
        del comps[j]
    total = math.fsum(w for w, _, _ in comps)
    return Gmm(tuple(
        GaussianComponent(w / total, m, 0.5 * (s + s.T)) for w, m, s in comps
    ))


def match_components(a: Gmm, b: Gmm) -> np.ndarray:
    """Permutation aligning b's components to a's by squared mean distance.

    Returns perm such that component j of a pairs with component perm[j]
    of b. Exhaustive search up to K = 8, the Hungarian assignment above.
    """
    if a.k != b.k:
        raise ValueError(f"component counts differ: {a.k} vs {b.k}")
    cost = np.sum((a.means[:, None, :] - b.means[None, :, :]) ** 2, axis=2)
    k = a.k
    if k <= EXHAUSTIVE_MATCH_LIMIT:
        rows = np.arange(k)
        best_perm, best_cost = None, np.inf
        for perm in itertools.permutations(range(k)):
            total = float(cost[rows, perm].sum())
            if total < best_cost:
                best_perm, best_cost = perm, total
        return np.array(best_perm)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=int)
    perm[rows] = cols
    return perm


def reorder_components(model: Gmm, perm) -> Gmm:
    """Mixture with components listed in the order perm."""
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(model.k)):
        raise ValueError(f"not a permutation of 0..{model.k - 1}: {perm.tolist()}")
    return Gmm(tuple(model.components[j] for j in perm))


def sphere_geodesic(w1: np.ndarray, w2: np.ndarray, t: float) -> np.ndarray:
    """Slerp between two unit vectors with non-negative dot product.

    Nearly colinear endpoints (angle below 1e-8) fall back to a
    renormalized linear blend.
    """
    u = np.asarray(w1, dtype=float)
    v = np.asarray(w2, dtype=float)
    _check_unit(u, "w1")
    _check_unit(v, "w2")
    _check_t(t)
    dot = float(np.clip(u @ v, -1.0, 1.0))
    if dot < 0.0:
        raise ValueError(f"endpoints must satisfy w1 . w2 >= 0, got {dot!r}")
    theta = math.acos(dot)
    if theta < COLINEAR_THETA:
        blend = (1.0 - t) * u + t * v
        return blend / np.linalg.norm(blend)
    s = math.sin(theta)
    return (math.sin((1.0 - t) * theta) * u + math.sin(t * theta) * v) / s


def _check_unit(vec: np.ndarray, name: str):
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a unit vector, norm is {norm!r}")


def _check_t(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must lie in [0, 1], got {t}")


def sphere_distance(w1: np.ndarray, w2: np.ndarray) -> float:
    """Great-circle angle between two unit vectors."""
    return math.acos(float(np.clip(np.asarray(w1) @ np.asarray(w2), -1.0, 1.0)))


def _spd_eigh(mat: np.ndarray):
    sym = _checked_spd(np.asarray(mat, dtype=float))
    lam, q = np.linalg.eigh(sym)
    return lam, q


def spd_power(mat: np.ndarray, t: float) -> np.ndarray:
    """Symmetric matrix power through the eigendecomposition."""
    lam, q = _spd_eigh(mat)
    out = (q * lam ** t) @ q.T
    return 0.5 * (out + out.T)


def spd_geodesic(s1: np.ndarray, s2: np.ndarray, t: float) -> np.ndarray:
    """Affine-invariant geodesic between SPD matrices."""
    _check_t(t)
    lam, q = _spd_eigh(s1)
    half = (q * np.sqrt(lam)) @ q.T
    inv_half = (q / np.sqrt(lam)) @ q.T
    inner = inv_half @ np.asarray(s2, dtype=float) @ inv_half
    mid = spd_power(0.5 * (inner + inner.T), t)
    out = half @ mid @ half
    return 0.5 * (out + out.T)


def spd_distance(s1: np.ndarray, s2: np.ndarray) -> float:
    """Affine-invariant distance ||log(S1^(-1/2) S2 S1^(-1/2))||_F."""
    lam, q = _spd_eigh(s1)
    inv_half = (q / np.sqrt(lam)) @ q.T
    inner = inv_half @ np.asarray(s2, dtype=float) @ inv_half
    ev, _ = _spd_eigh(0.5 * (inner + inner.T))
    return float(np.linalg.norm(np.log(ev)))


def product_geodesic(p1: ProductPoint, p2: ProductPoint, t: float) -> ProductPoint:
    """Slot-wise geodesic between two product points of equal K."""
    if p1.k != p2.k:
        raise ValueError(f"component counts differ: {p1.k} vs {p2.k}")
    _check_t(t)
    sq = sphere_geodesic(p1.sqrt_weights, p2.sqrt_weights, t)
    means = (1.0 - t) * p1.means + t * p2.means
    covs = np.stack([
        spd_geodesic(p1.covariances[j], p2.covariances[j], t) for j in range(p1.k)
    ])
    return ProductPoint(sq, means, covs)


@dataclass(frozen=True)
class InterpolationConfig:
    """Settings for interpolate_point_clouds.

    candidate_ks of None selects the standard candidate set for each
    cloud's size. seed drives the per-frame sampling streams.
    """

    candidate_ks: tuple[int, ...] | None = None
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 0


@dataclass(frozen=True)
class InterpolationResult:
    """Frames sampled along the geodesic plus the models behind them."""

    ts: tuple[float, ...]
    frames: tuple[PointCloud, ...]
    models: tuple[Gmm, ...]
    source: Gmm
    target: Gmm


def dominant_member(ensemble: GmmEnsemble) -> Gmm:
    """The member with the highest selection probability, ties to smaller K."""
    best = max(ensemble.members, key=lambda m: (m.weight, -m.model.k))
    return best.model


def interpolate_point_clouds(x: PointCloud, y: PointCloud, ts=DEFAULT_TS,
                             n_out: int | None = None,
                             config: InterpolationConfig = InterpolationConfig()
                             ) -> InterpolationResult:
    """Morph between two clouds along the product-manifold geodesic.

    Both clouds get an AIC ensemble; the dominant member of each is
    reduced to the smaller component count, the components are matched on
    mean distances, and one cloud is sampled per requested t with an
    independent stream per frame.
    """
    ts = tuple(float(t) for t in ts)
    if not ts:
        raise ValueError("need at least one interpolation parameter")
    for t in ts:
        _check_t(t)
    if n_out is None:
        n_out = len(x)
    if n_out < 1:
        raise ValueError(f"output cloud size must be >= 1, got {n_out}")
    ks_x = config.candidate_ks if config.candidate_ks else default_candidate_ks(len(x))
    ks_y = config.candidate_ks if config.candidate_ks else default_candidate_ks(len(y))
    ensemble_x, _ = build_ensemble(x, ks_x, config.fit)
    ensemble_y, _ = build_ensemble(y, ks_y, config.fit)
    gx = dominant_member(ensemble_x)
    gy = dominant_member(ensemble_y)
    k = min(gx.k, gy.k)
    source = project_to_k(gx, k)
    target = project_to_k(gy, k)
    target = reorder_components(target, match_components(source, target))
    p1 = gmm_to_product_point(source)
    p2 = gmm_to_product_point(target)
    models = tuple(product_point_to_gmm(product_geodesic(p1, p2, t)) for t in ts)
    frames = tuple(
        generate_point_cloud(GmmEnsemble.single(m), n_out, RngStream(config.seed, i))
        for i, m in enumerate(models)
    )
    return InterpolationResult(ts, frames, models, source, target)
