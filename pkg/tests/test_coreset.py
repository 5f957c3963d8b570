"""Tests for coreset construction, error certification, and persistence."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from kcoreset import (
    Coreset,
    EpsCertificate,
    ThresholdNotReachedError,
    ValidationError,
    WeightedPointSet,
    certify_eps,
    coreset_from_run,
    k_clustering,
    k_clustering_doubled,
    load_coreset,
    rcc,
    rcc_fixed_size,
)
from oracles import random_instance


def as_set(points, weights=None):
    points = np.asarray(points, dtype=float)
    if weights is None:
        weights = np.ones(len(points))
    return WeightedPointSet(points, np.asarray(weights, dtype=float))


def spread_set(seed, n=80, d=3):
    rng = np.random.default_rng(seed)
    return as_set(rng.uniform(0.0, 1.0, size=(n, d)), rng.uniform(0.5, 2.0, n))


def clustered_set(seed, n=80, blobs=4, spread=0.01, d=3):
    """Tight blobs: small coresets reach small gap certificates here."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.1, 0.9, size=(blobs, d))
    pts = centers[rng.integers(0, blobs, n)] + spread * rng.standard_normal((n, d))
    return as_set(pts, rng.uniform(0.5, 2.0, n))


class TestCertify:
    def test_formulas_recomputed_by_hand(self):
        ps = spread_set(1)
        run = k_clustering_doubled(ps, 4, z=2, seed=0)
        cert = certify_eps(ps, run, rho=1.5)
        gap = max(run.base.cost - run.doubled.cost, 0.0)
        assert cert.gap == pytest.approx(gap)
        assert cert.eps_gap == pytest.approx(1.5 * (gap / ps.w_min) ** 0.5)
        dists = cdist(ps.points, run.base.centers).min(axis=1)
        assert cert.max_center_dist == pytest.approx(dists.max())
        assert cert.eps_maxdist == pytest.approx(1.5 * dists.max())
        assert cert.k == 4 and cert.z == 2

    def test_scales_linearly_in_rho(self):
        ps = spread_set(2)
        run = k_clustering_doubled(ps, 3, z=1, seed=1)
        one = certify_eps(ps, run, rho=1.0)
        five = certify_eps(ps, run, rho=5.0)
        assert five.eps_gap == pytest.approx(5.0 * one.eps_gap)
        assert five.eps_maxdist == pytest.approx(5.0 * one.eps_maxdist)

    def test_accepts_plain_run_and_extends_it(self):
        ps = spread_set(3)
        base = k_clustering(ps, 3, z=2, seed=4)
        cert = certify_eps(ps, base)
        run = k_clustering_doubled(ps, 3, z=2, seed=4)
        assert cert.gap == pytest.approx(max(run.gap, 0.0))

    @pytest.mark.parametrize("z", [1, 2])
    @pytest.mark.parametrize("seed", range(8))
    def test_maxdist_bound_implied_by_gap_bound(self, z, seed):
        # the realized max distance never exceeds what the gap certifies,
        # so the gap bound is always the weaker (safe) one
        ps = spread_set(40 + seed, n=60)
        run = k_clustering_doubled(ps, 1 + seed % 5, z=z, seed=seed)
        cert = certify_eps(ps, run)
        slack = 1e-9 if z == 2 else 1e-5
        assert cert.eps_maxdist <= cert.eps_gap + slack

    def test_bad_rho_rejected(self):
        ps = spread_set(4, n=10)
        run = k_clustering_doubled(ps, 2, seed=0)
        for rho in (0.0, -1.0, np.inf, np.nan):
            with pytest.raises(ValidationError):
                certify_eps(ps, run, rho=rho)

    def test_absolute_conversions(self):
        cert = EpsCertificate(
            eps_gap=0.4, eps_maxdist=0.1, rho=2.0, z=2, k=3,
            gap=1.0, max_center_dist=0.05, w_min=1.0,
        )
        assert cert.absolute(50.0, "sum") == pytest.approx(5.0)
        assert cert.absolute(50.0, "max") == pytest.approx(0.1)
        with pytest.raises(ValidationError):
            cert.absolute(50.0, "median")


class TestCoresetFromRun:
    def test_weights_are_cluster_weight_sums(self):
        ps = spread_set(5, n=40)
        run = k_clustering(ps, 4, seed=2)
        coreset = coreset_from_run(ps, run)
        for i, c in enumerate(coreset.points):
            row = np.flatnonzero((run.centers == c).all(axis=1))[0]
            expected = ps.weights[run.assignment == row].sum()
            assert coreset.weights[i] == pytest.approx(expected)
        assert coreset.total_weight == pytest.approx(ps.total_weight)

    def test_empty_clusters_dropped(self):
        # duplicated points make extra centers useless; their clusters are
        # empty and must not appear in the coreset
        pts = np.array([[0.0, 0.0]] * 5 + [[4.0, 4.0]] * 5)
        ps = as_set(pts)
        run = k_clustering(ps, 4, seed=0)
        coreset = coreset_from_run(ps, run)
        assert coreset.size <= 2
        assert coreset.total_weight == pytest.approx(10.0)
        assert np.all(coreset.weights > 0)


class TestFixedSize:
    def test_returns_exactly_k_points_on_spread_data(self):
        ps = spread_set(6)
        coreset = rcc_fixed_size(ps, 10, z=2, seed=0)
        assert coreset.size == 10
        assert coreset.total_weight == pytest.approx(ps.total_weight)
        assert coreset.eps_bound == pytest.approx(coreset.certificate.eps_maxdist)
        assert coreset.provenance["algorithm"] == "rcc_fixed"

    def test_certify_false_skips_certificate(self):
        ps = spread_set(7)
        coreset = rcc_fixed_size(ps, 5, certify=False)
        assert coreset.certificate is None and coreset.eps_bound is None

    def test_rho_scales_bound(self):
        ps = spread_set(8)
        a = rcc_fixed_size(ps, 6, seed=1, rho=1.0)
        b = rcc_fixed_size(ps, 6, seed=1, rho=3.0)
        assert b.eps_bound == pytest.approx(3.0 * a.eps_bound)
        assert np.array_equal(a.points, b.points)

    def test_invalid_k(self):
        ps = spread_set(9, n=5)
        with pytest.raises(ValidationError):
            rcc_fixed_size(ps, 0)
        with pytest.raises(ValidationError):
            rcc_fixed_size(ps, 6)


class TestAdaptive:
    def test_meets_the_gap_threshold(self):
        ps = clustered_set(10)
        eps = 0.3
        coreset = rcc(ps, eps=eps, z=2, seed=0)
        cert = coreset.certificate
        assert cert.gap <= ps.w_min * eps**2 + 1e-12
        assert coreset.eps_bound == eps
        assert coreset.provenance["algorithm"] == "rcc"
        assert coreset.provenance["sizes_tried"] == sorted(coreset.provenance["sizes_tried"])

    def test_tighter_target_never_gives_larger_gap(self):
        ps = clustered_set(11)
        loose = rcc(ps, eps=0.3, z=2, seed=3)
        tight = rcc(ps, eps=0.1, z=2, seed=3)
        assert tight.certificate.gap <= ps.w_min * 0.1**2 + 1e-12
        assert loose.certificate.gap <= ps.w_min * 0.3**2 + 1e-12
        assert tight.size >= loose.size

    def test_deterministic(self):
        ps = clustered_set(12)
        a = rcc(ps, eps=0.3, seed=9)
        b = rcc(ps, eps=0.3, seed=9)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.weights, b.weights)

    def test_unreachable_target_raises_with_diagnostics(self):
        ps = spread_set(13, n=40)
        with pytest.raises(ThresholdNotReachedError) as err:
            rcc(ps, eps=1e-6, z=2, seed=0, k_max=8)
        assert err.value.best_gap > 0
        assert 1 <= err.value.best_k <= 8

    def test_k_max_respected(self):
        ps = clustered_set(14, blobs=2, spread=0.005)
        coreset = rcc(ps, eps=0.3, z=2, seed=1, k_max=4)
        assert coreset.size <= 4

    def test_z1_threshold_uses_first_power(self):
        ps = clustered_set(15, spread=0.001)
        eps = 0.5
        coreset = rcc(ps, eps=eps, z=1, seed=2)
        assert coreset.certificate.gap <= ps.w_min * eps + 1e-12

    def test_invalid_inputs(self):
        ps = spread_set(16, n=10)
        with pytest.raises(ValidationError):
            rcc(ps, eps=0.0)
        with pytest.raises(ValidationError):
            rcc(ps, eps=0.5, rho=np.inf)


class TestGuaranteeOnModels:
    """Spot-check of the headline inequality on random query models.

    Models are shifted so every per-point cost is at least 1, the regime the
    relative guarantee is stated for.  The full-scale version runs in the
    acceptance suite.
    """

    @pytest.mark.parametrize("z", [1, 2])
    def test_sum_and_max_costs_stay_in_band(self, z):
        rng = np.random.default_rng(17)
        ps = spread_set(17, n=70)
        coreset = rcc_fixed_size(ps, 12, z=z, seed=0)
        eps = coreset.certificate.eps_maxdist
        for _ in range(30):
            centers = rng.uniform(0.0, 1.0, size=(3, ps.dim))
            centers[:, 0] += 2.0  # every point is at distance >= 1
            dp = cdist(ps.points, centers).min(axis=1)
            ds = cdist(coreset.points, centers).min(axis=1)
            # k-median style sum cost
            cp = float(ps.weights @ dp)
            cs = float(coreset.weights @ ds)
            assert (1 - eps) * cp - 1e-9 <= cs <= (1 + eps) * cp + 1e-9
            # ball style max cost
            mp, ms = float(cdist(ps.points, centers[:1]).max()), float(
                cdist(coreset.points, centers[:1]).max()
            )
            assert (1 - eps) * mp - 1e-9 <= ms <= (1 + eps) * mp + 1e-9


class TestPersistence:
    def test_round_trip_exact(self, tmp_path):
        ps = spread_set(18)
        coreset = rcc_fixed_size(ps, 7, z=1, seed=5, rho=2.0)
        prefix = str(tmp_path / "core")
        coreset.save(prefix)
        back = load_coreset(prefix)
        assert np.array_equal(back.points, coreset.points)
        assert np.array_equal(back.weights, coreset.weights)
        assert back.eps_bound == coreset.eps_bound
        assert back.certificate == coreset.certificate
        assert back.provenance["algorithm"] == "rcc_fixed"

    def test_load_accepts_csv_suffix(self, tmp_path):
        ps = spread_set(19, n=20)
        coreset = rcc_fixed_size(ps, 3)
        prefix = str(tmp_path / "core")
        coreset.save(prefix)
        back = load_coreset(prefix + ".csv")
        assert np.array_equal(back.points, coreset.points)

    def test_single_point_coreset_round_trip(self, tmp_path):
        coreset = Coreset(np.array([[1.0, 2.0]]), np.array([5.0]), {"algorithm": "manual"})
        prefix = str(tmp_path / "one")
        coreset.save(prefix)
        back = load_coreset(prefix)
        assert back.points.shape == (1, 2)
        assert back.weights[0] == 5.0

    def test_csv_only_load_gets_empty_metadata(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("x0,x1,weight\n1.0,2.0,3.0\n4.0,5.0,6.0\n")
        back = load_coreset(str(path))
        assert back.provenance == {}
        assert back.certificate is None
        assert np.array_equal(back.weights, [3.0, 6.0])


class TestNegativeWeights:
    def test_all_positive_is_a_no_op(self):
        coreset = Coreset(np.eye(3), np.array([1.0, 2.0, 3.0]), {})
        ps, changed = coreset.nonnegative_pointset()
        assert not changed
        assert np.array_equal(ps.weights, coreset.weights)

    def test_clamp_preserves_total_weight(self):
        coreset = Coreset(np.eye(3), np.array([4.0, -1.0, 2.0]), {})
        ps, changed = coreset.nonnegative_pointset()
        assert changed
        assert ps.size == 2
        assert ps.total_weight == pytest.approx(5.0)
        # kept points keep their relative proportions
        assert ps.weights[0] / ps.weights[1] == pytest.approx(2.0)

    def test_no_positive_weight_rejected(self):
        coreset = Coreset(np.eye(2), np.array([-1.0, -2.0]), {})
        with pytest.raises(ValidationError):
            coreset.nonnegative_pointset()

    def test_weight_shape_checked(self):
        with pytest.raises(ValidationError):
            Coreset(np.eye(3), np.array([1.0, 2.0]), {})
