"""Product-manifold representation, geodesic laws, and interpolation."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import assert_moments_close, random_gmm, random_spd
from gmmcloud.em import FitConfig
from gmmcloud.embedding import arc_distance, embed, make_probe_set
from gmmcloud.geodesics import (
    DEFAULT_TS,
    InterpolationConfig,
    ProductPoint,
    dominant_member,
    gmm_to_product_point,
    interpolate_point_clouds,
    match_components,
    product_geodesic,
    product_point_to_gmm,
    project_to_k,
    reorder_components,
    sphere_distance,
    sphere_geodesic,
    spd_distance,
    spd_geodesic,
    spd_power,
)
from gmmcloud.model import (
    DegenerateCovarianceError,
    EnsembleMember,
    GaussianComponent,
    Gmm,
    GmmEnsemble,
    PointCloud,
)
from gmmcloud.sampling import mixture_moments
from gmmcloud.shapes import make_bent_tube, tube_spec_for_class


def random_unit_nonneg(rng, k):
    v = np.abs(rng.normal(size=k)) + 1e-3
    return v / np.linalg.norm(v)


def random_product_point(rng, k):
    return gmm_to_product_point(random_gmm(rng, k))


# -------------------------------------------------------- product point


def test_product_point_validation():
    with pytest.raises(ValueError, match="norm"):
        ProductPoint(np.array([0.5, 0.5]), np.zeros((3, 2)),
                     np.stack([np.eye(3), np.eye(3)]))
    with pytest.raises(ValueError, match=">= 0"):
        ProductPoint(np.array([-0.6, 0.8]), np.zeros((3, 2)),
                     np.stack([np.eye(3), np.eye(3)]))
    with pytest.raises(DegenerateCovarianceError):
        ProductPoint(np.array([1.0]), np.zeros((3, 1)),
                     np.zeros((1, 3, 3)))


def test_sqrt_weight_map():
    model = Gmm((
        GaussianComponent(0.25, np.zeros(3), np.eye(3)),
        GaussianComponent(0.75, np.ones(3), np.eye(3)),
    ))
    point = gmm_to_product_point(model)
    np.testing.assert_allclose(point.sqrt_weights, [0.5, math.sqrt(0.75)], atol=1e-15)
    assert point.means.shape == (3, 2)
    np.testing.assert_array_equal(point.means[:, 1], np.ones(3))


def test_uniform_weights_map_to_uniform_sphere_point():
    k = 4
    model = Gmm(tuple(
        GaussianComponent(0.25, np.array([float(j), 0.0, 0.0]), np.eye(3))
        for j in range(k)
    ))
    point = gmm_to_product_point(model)
    np.testing.assert_allclose(point.sqrt_weights, 0.5, atol=1e-15)


def test_product_point_round_trip():
    rng = np.random.default_rng(2)
    model = random_gmm(rng, 3)
    back = product_point_to_gmm(gmm_to_product_point(model))
    np.testing.assert_allclose(back.weights, model.weights, atol=1e-14)
    np.testing.assert_allclose(back.means, model.means, atol=1e-14)
    np.testing.assert_allclose(back.covariances, model.covariances, atol=1e-14)
    point = random_product_point(rng, 4)
    again = gmm_to_product_point(product_point_to_gmm(point))
    np.testing.assert_allclose(again.sqrt_weights, point.sqrt_weights, atol=1e-14)
    np.testing.assert_allclose(again.means, point.means, atol=1e-14)
    np.testing.assert_allclose(again.covariances, point.covariances, atol=1e-14)


def test_zero_weight_component_survives_round_trip():
    point = ProductPoint(np.array([1.0, 0.0]),
                         np.array([[0.0, 5.0], [0.0, 0.0], [0.0, 0.0]]),
                         np.stack([np.eye(3), np.eye(3)]))
    model = product_point_to_gmm(point)
    assert model.k == 2
    assert model.components[0].weight == 1.0
    assert model.components[1].weight == 0.0
    half = ProductPoint(np.full(2, 1.0 / math.sqrt(2.0)),
                        np.zeros((3, 2)), np.stack([np.eye(3), np.eye(3)]))
    np.testing.assert_allclose(product_point_to_gmm(half).weights, 0.5, atol=1e-15)


# ----------------------------------------------------------- projection


def test_project_identity():
    model = random_gmm(np.random.default_rng(3), 4)
    same = project_to_k(model, 4)
    assert same.k == 4
    np.testing.assert_allclose(same.weights, model.weights, atol=1e-15)
    np.testing.assert_allclose(same.means, model.means, atol=1e-15)
    np.testing.assert_allclose(same.covariances, model.covariances, atol=1e-15)


def test_project_merge_formula():
    m1, m2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0])
    s1, s2 = np.diag([1.0, 2.0, 3.0]), np.eye(3)
    model = Gmm((GaussianComponent(0.5, m1, s1), GaussianComponent(0.5, m2, s2)))
    merged = project_to_k(model, 1).components[0]
    assert merged.weight == 1.0
    np.testing.assert_allclose(merged.mean, 0.5 * (m1 + m2), atol=1e-15)
    d = m1 - m2
    expected = 0.5 * (s1 + s2) + 0.25 * np.outer(d, d)
    np.testing.assert_allclose(merged.covariance, expected, atol=1e-14)


def test_project_preserves_mixture_moments():
    rng = np.random.default_rng(5)
    model = random_gmm(rng, 6)
    mean_before, cov_before = mixture_moments(model)
    for k_target in (4, 2, 1):
        reduced = project_to_k(model, k_target)
        assert reduced.k == k_target
        mean_after, cov_after = mixture_moments(reduced)
        np.testing.assert_allclose(mean_after, mean_before, atol=1e-10)
        np.testing.assert_allclose(cov_after, cov_before, atol=1e-10)


def test_project_merges_nearest_pair_first():
    model = Gmm((
        GaussianComponent(0.25, np.array([0.0, 0.0, 0.0]), np.eye(3)),
        GaussianComponent(0.25, np.array([0.1, 0.0, 0.0]), np.eye(3)),
        GaussianComponent(0.5, np.array([50.0, 0.0, 0.0]), np.eye(3)),
    ))
    reduced = project_to_k(model, 2)
    means = np.sort(reduced.means[:, 0])
    np.testing.assert_allclose(means, [0.05, 50.0], atol=1e-12)


def test_project_rejects_bad_targets():
    model = random_gmm(np.random.default_rng(6), 2)
    with pytest.raises(ValueError):
        project_to_k(model, 0)
    with pytest.raises(ValueError, match="project"):
        project_to_k(model, 3)


# ------------------------------------------------------------- matching


def test_match_identity_and_reversal():
    model = random_gmm(np.random.default_rng(7), 4)
    np.testing.assert_array_equal(match_components(model, model), np.arange(4))
    reversed_model = Gmm(tuple(reversed(model.components)))
    np.testing.assert_array_equal(match_components(model, reversed_model),
                                  np.array([3, 2, 1, 0]))


@pytest.mark.parametrize("k", [3, 9])
def test_match_equals_brute_force(k):
    # k = 9 exercises the assignment-solver branch above the
    # exhaustive-search limit
    rng = np.random.default_rng(8 + k)
    a = random_gmm(rng, k)
    b = random_gmm(rng, k)
    cost = np.sum((a.means[:, None, :] - b.means[None, :, :]) ** 2, axis=2)
    rows = cost.tolist()
    best_cost = min(
        math.fsum(rows[i][j] for i, j in enumerate(perm))
        for perm in itertools.permutations(range(k))
    )
    got = match_components(a, b)
    assert math.isclose(float(cost[np.arange(k), got].sum()), best_cost, rel_tol=1e-10)


def test_match_requires_equal_counts():
    rng = np.random.default_rng(10)
    with pytest.raises(ValueError, match="differ"):
        match_components(random_gmm(rng, 2), random_gmm(rng, 3))


def test_reorder_components():
    model = random_gmm(np.random.default_rng(11), 3)
    swapped = reorder_components(model, [2, 0, 1])
    assert swapped.components[0] is model.components[2]
    with pytest.raises(ValueError, match="permutation"):
        reorder_components(model, [0, 0, 1])


# ---------------------------------------------------------- sphere slot


def test_sphere_geodesic_endpoints():
    rng = np.random.default_rng(12)
    w1, w2 = random_unit_nonneg(rng, 4), random_unit_nonneg(rng, 4)
    np.testing.assert_allclose(sphere_geodesic(w1, w2, 0.0), w1, atol=1e-14)
    np.testing.assert_allclose(sphere_geodesic(w1, w2, 1.0), w2, atol=1e-14)


def test_sphere_geodesic_quarter_circle_midpoint():
    mid = sphere_geodesic(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.5)
    np.testing.assert_allclose(mid, np.full(2, 1.0 / math.sqrt(2.0)), atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 1.0))
def test_sphere_geodesic_stays_unit_and_additive(seed, t):
    rng = np.random.default_rng(seed)
    w1, w2 = random_unit_nonneg(rng, 5), random_unit_nonneg(rng, 5)
    out = sphere_geodesic(w1, w2, t)
    assert abs(float(np.linalg.norm(out)) - 1.0) < 1e-12
    theta = sphere_distance(w1, w2)
    # arccos is ill-conditioned next to the start point, so only check
    # additivity once the arc is long enough to measure
    if t * theta > 1e-3:
        assert abs(sphere_distance(w1, out) - t * theta) < 1e-10


def test_sphere_geodesic_degenerate_pair():
    w = random_unit_nonneg(np.random.default_rng(13), 3)
    np.testing.assert_allclose(sphere_geodesic(w, w, 0.37), w, atol=1e-12)


def test_sphere_geodesic_input_checks():
    w = np.array([1.0, 0.0])
    with pytest.raises(ValueError, match="unit"):
        sphere_geodesic(np.array([2.0, 0.0]), w, 0.5)
    with pytest.raises(ValueError, match="0, 1"):
        sphere_geodesic(w, w, 1.5)
    with pytest.raises(ValueError, match=">= 0"):
        sphere_geodesic(np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 0.5)


# ------------------------------------------------------------- SPD slot


def test_spd_geodesic_endpoints():
    rng = np.random.default_rng(14)
    s1, s2 = random_spd(rng), random_spd(rng)
    np.testing.assert_allclose(spd_geodesic(s1, s2, 0.0), s1, atol=1e-10)
    np.testing.assert_allclose(spd_geodesic(s1, s2, 1.0), s2, atol=1e-10)


def test_spd_geometric_mean_of_commuting_pair():
    mid = spd_geodesic(np.eye(3), np.diag([4.0, 1.0, 1.0]), 0.5)
    np.testing.assert_allclose(mid, np.diag([2.0, 1.0, 1.0]), atol=1e-12)


def test_spd_commuting_pair_matches_scalar_powers():
    a = np.array([2.0, 0.5, 1.0])
    b = np.array([8.0, 4.5, 0.2])
    for t in (0.25, 0.5, 0.75):
        out = spd_geodesic(np.diag(a), np.diag(b), t)
        np.testing.assert_allclose(out, np.diag(a ** (1 - t) * b ** t), atol=1e-10)


def test_spd_geodesic_additivity():
    rng = np.random.default_rng(15)
    s1, s2 = random_spd(rng), random_spd(rng)
    total = spd_distance(s1, s2)
    for s in (0.25, 0.5, 0.75):
        gamma = spd_geodesic(s1, s2, s)
        assert abs(spd_distance(s1, gamma) - s * total) < 1e-8


def test_spd_gl_invariance():
    rng = np.random.default_rng(16)
    for _ in range(20):
        a = rng.normal(size=(3, 3))
        s1, s2 = random_spd(rng), random_spd(rng)
        t = float(rng.uniform())
        direct = a @ spd_geodesic(s1, s2, t) @ a.T
        congruent = spd_geodesic(a @ s1 @ a.T, a @ s2 @ a.T, t)
        rel = np.linalg.norm(direct - congruent) / np.linalg.norm(direct)
        assert rel < 1e-8


def test_spd_outputs_stay_positive():
    rng = np.random.default_rng(17)
    s1 = random_spd(rng, scale=1e-3)
    s2 = random_spd(rng, scale=1e3)
    for t in np.linspace(0.0, 1.0, 7):
        lam = np.linalg.eigvalsh(spd_geodesic(s1, s2, float(t)))
        assert np.all(lam > 0.0)


def test_spd_power_and_distance_basics():
    s = random_spd(np.random.default_rng(18))
    np.testing.assert_allclose(spd_power(s, 1.0), s, atol=1e-12)
    np.testing.assert_allclose(spd_power(s, 0.5) @ spd_power(s, 0.5), s, atol=1e-10)
    assert spd_distance(s, s) < 1e-12
    s2 = random_spd(np.random.default_rng(19))
    assert abs(spd_distance(s, s2) - spd_distance(s2, s)) < 1e-12


def test_spd_rejects_non_spd_input():
    with pytest.raises(DegenerateCovarianceError):
        spd_geodesic(np.diag([1.0, 1.0, -1.0]), np.eye(3), 0.5)
    with pytest.raises(DegenerateCovarianceError):
        spd_distance(np.eye(3), np.diag([1.0, 0.0, 1.0]))


# --------------------------------------------------------- product path


def test_product_geodesic_endpoints_and_midpoint():
    rng = np.random.default_rng(20)
    p1, p2 = random_product_point(rng, 3), random_product_point(rng, 3)
    start = product_geodesic(p1, p2, 0.0)
    end = product_geodesic(p1, p2, 1.0)
    np.testing.assert_allclose(start.sqrt_weights, p1.sqrt_weights, atol=1e-10)
    np.testing.assert_allclose(start.means, p1.means, atol=1e-10)
    np.testing.assert_allclose(start.covariances, p1.covariances, atol=1e-10)
    np.testing.assert_allclose(end.sqrt_weights, p2.sqrt_weights, atol=1e-10)
    np.testing.assert_allclose(end.means, p2.means, atol=1e-10)
    np.testing.assert_allclose(end.covariances, p2.covariances, atol=1e-10)
    mid = product_geodesic(p1, p2, 0.5)
    np.testing.assert_array_equal(mid.means, 0.5 * p1.means + 0.5 * p2.means)


def test_product_geodesic_constant_path():
    p = random_product_point(np.random.default_rng(21), 2)
    for t in (0.0, 0.3, 1.0):
        q = product_geodesic(p, p, t)
        np.testing.assert_allclose(q.sqrt_weights, p.sqrt_weights, atol=1e-12)
        np.testing.assert_allclose(q.means, p.means, atol=1e-12)
        np.testing.assert_allclose(q.covariances, p.covariances, atol=1e-10)


def test_product_geodesic_rejects_mismatched_k():
    rng = np.random.default_rng(22)
    with pytest.raises(ValueError, match="differ"):
        product_geodesic(random_product_point(rng, 2), random_product_point(rng, 3), 0.5)


# -------------------------------------------------------- interpolation


def test_dominant_member_prefers_weight_then_smaller_k():
    rng = np.random.default_rng(23)
    m1, m2 = random_gmm(rng, 1), random_gmm(rng, 2)
    heavy = GmmEnsemble((EnsembleMember(0.7, m2), EnsembleMember(0.3, m1)))
    assert dominant_member(heavy) is m2
    tied = GmmEnsemble((EnsembleMember(0.5, m2), EnsembleMember(0.5, m1)))
    assert dominant_member(tied) is m1


def test_interpolate_t_zero_samples_source_model():
    cloud = make_bent_tube(tube_spec_for_class("nondemented", n_points=600), seed=0)
    config = InterpolationConfig(candidate_ks=(2, 4), fit=FitConfig(seed=0), seed=0)
    result = interpolate_point_clouds(cloud, cloud, ts=(0.0,), n_out=5000,
                                      config=config)
    assert result.ts == (0.0,)
    assert len(result.frames) == 1
    assert len(result.frames[0]) == 5000
    assert_moments_close(result.frames[0].points, cloud.points, rel=0.05)


def test_interpolate_identical_clouds_stay_close():
    rng = np.random.default_rng(24)
    cloud = make_bent_tube(tube_spec_for_class("demented", n_points=400), seed=1)
    unrelated = PointCloud(np.array([30.0, 30.0, 30.0]) + rng.normal(size=(400, 3)))
    config = InterpolationConfig(candidate_ks=(2,), fit=FitConfig(seed=0), seed=0)
    result = interpolate_point_clouds(cloud, cloud, ts=(0.0, 0.5, 1.0), config=config)
    assert all(len(f) == 400 for f in result.frames)
    other = interpolate_point_clouds(unrelated, unrelated, ts=(0.0,), config=config)
    probe_set = make_probe_set([cloud, unrelated], seed=0)
    frame_embeddings = [embed(m, probe_set) for m in result.models]
    cross = arc_distance(embed(result.models[0], probe_set),
                         embed(other.models[0], probe_set))
    for e1, e2 in itertools.combinations(frame_embeddings, 2):
        assert arc_distance(e1, e2) < cross


def test_interpolate_default_grid():
    assert DEFAULT_TS == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def test_interpolate_validates_arguments():
    cloud = make_bent_tube(tube_spec_for_class("demented", n_points=60), seed=2)
    config = InterpolationConfig(candidate_ks=(2,), fit=FitConfig(seed=0), seed=0)
    with pytest.raises(ValueError):
        interpolate_point_clouds(cloud, cloud, ts=(), config=config)
    with pytest.raises(ValueError):
        interpolate_point_clouds(cloud, cloud, ts=(1.2,), config=config)
    with pytest.raises(ValueError):
        interpolate_point_clouds(cloud, cloud, ts=(0.5,), n_out=0, config=config)
