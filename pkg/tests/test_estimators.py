"""Estimator calibration against closed-form targets: norms, spacing and
kNN entropies, mutual information, whiteness, density fit, determinants.
"""

import math

import numpy as np
import pytest

import entrolim as el

H_GAUSS = 0.5 * math.log2(2.0 * math.pi * math.e)  # N(0,1), bits


def _rng(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# L_p norms


def test_lp_norm_matches_scale_for_gg_samples():
    for p in (1.0, 2.0, 4.0):
        x = el.GeneralizedGaussian(p, 0.7).sample(200_000, seed=int(p))
        value, se = el.lp_norm_estimate(x, p)
        assert value == pytest.approx(0.7, abs=5 * se)
        assert se < 0.01


def test_lp_norm_inf_is_max_with_spacing_scale():
    x = np.array([0.5, -1.0, 2.0, -3.0, 4.0, -5.0, 6.0, -7.0, 8.0, -10.0])
    value, se = el.lp_norm_estimate(x, math.inf)
    assert value == 10.0
    assert se == 10.0 - 4.0  # gap to the sixth-largest magnitude
    v2, s2 = el.lp_norm_estimate(np.array([1.0, 3.0]), math.inf)
    assert (v2, s2) == (3.0, 2.0)


def test_lp_norm_edge_cases():
    with pytest.raises(ValueError, match="samples"):
        el.lp_norm_estimate(np.array([1.0]), 2.0)
    with pytest.raises(ValueError, match="p"):
        el.lp_norm_estimate(np.ones(10), 0.5)
    value, se = el.lp_norm_estimate(np.zeros(10), 2.0)
    assert value == 0.0 and se == 1e-300


# ---------------------------------------------------------------------------
# spacing entropy


def test_spacing_entropy_gaussian():
    x = _rng(0).standard_normal(20_000)
    est = el.entropy_estimate_1d(x)
    assert est.estimator_id == "vasicek"
    assert est.flag is None
    assert abs(est.value_bits - H_GAUSS) <= 4 * est.std_error_bits
    assert est.std_error_bits < 0.05


def test_spacing_entropy_uniform():
    x = _rng(1).uniform(-1.0, 1.0, size=20_000)
    est = el.entropy_estimate_1d(x)  # h = 1 bit exactly
    assert abs(est.value_bits - 1.0) <= 4 * est.std_error_bits


def test_spacing_entropy_scale_shift():
    x = _rng(2).standard_normal(5_000)
    base = el.entropy_estimate_1d(x)
    scaled = el.entropy_estimate_1d(4.0 * x)
    assert scaled.value_bits - base.value_bits == pytest.approx(2.0, abs=1e-9)


def test_spacing_entropy_flags_ties():
    x = np.repeat(_rng(3).standard_normal(50), 4)
    est = el.entropy_estimate_1d(x)
    assert est.flag == "ties"


def test_spacing_entropy_needs_samples():
    with pytest.raises(ValueError, match="100"):
        el.entropy_estimate_1d(np.arange(99, dtype=float))


# ---------------------------------------------------------------------------
# kNN entropy


def test_knn_entropy_2d_gaussian():
    pts = _rng(4).standard_normal((20_000, 2))
    est = el.entropy_estimate_knn(pts)
    target = math.log2(2.0 * math.pi * math.e)  # h(N(0, I_2))
    assert est.estimator_id == "knn_kl"
    assert abs(est.value_bits - target) <= 4 * est.std_error_bits


def test_knn_entropy_1d_promotes():
    x = _rng(5).standard_normal(5_000)
    est = el.entropy_estimate_knn(x)
    assert abs(est.value_bits - H_GAUSS) <= 5 * est.std_error_bits


def test_knn_entropy_flags():
    x = _rng(6).standard_normal(500)
    line = np.column_stack([x, 2.0 * x])
    assert el.entropy_estimate_knn(line).flag == "degenerate"
    # five copies of each point: the default 4th neighbour sits at distance 0
    dup = np.repeat(_rng(7).standard_normal((60, 2)), 5, axis=0)
    assert el.entropy_estimate_knn(dup).flag == "ties"


def test_knn_entropy_validation():
    pts = _rng(8).standard_normal((200, 5))
    with pytest.raises(ValueError, match="dimension"):
        el.entropy_estimate_knn(pts)
    with pytest.raises(ValueError, match="k_neighbors"):
        el.entropy_estimate_knn(_rng(8).standard_normal((200, 2)), k_neighbors=0)
    with pytest.raises(ValueError, match="100"):
        el.entropy_estimate_knn(_rng(8).standard_normal((50, 2)))


def test_conditional_entropy_ar1():
    model = el.GaussARMA(ar=(0.9,))
    path = model.sample_path(30_000, seed=10)
    est = el.conditional_entropy_estimate(path, memory=1)
    # one lag is the full memory of AR(1): h(d_k | d_{k-1}) = h(N(0,1))
    assert abs(est.value_bits - H_GAUSS) <= 4 * est.std_error_bits


def test_conditional_entropy_memory_zero_is_marginal():
    path = el.GaussARMA(ar=(0.5,)).sample_path(12_000, seed=11)
    a = el.conditional_entropy_estimate(path, memory=0)
    b = el.entropy_estimate_knn(path)
    assert a.value_bits == b.value_bits


def test_conditional_entropy_validation():
    path = np.zeros(500)
    with pytest.raises(ValueError, match="10000"):
        el.conditional_entropy_estimate(path, memory=1)
    long_path = _rng(12).standard_normal(12_000)
    with pytest.raises(ValueError, match="memory"):
        el.conditional_entropy_estimate(long_path, memory=4)


# ---------------------------------------------------------------------------
# mutual information


def test_mi_independent_near_zero():
    g = _rng(13)
    mi, se, flag = el.mutual_information_estimate(
        g.standard_normal(20_000), g.standard_normal(20_000)
    )
    assert flag is None
    assert mi >= 0.0
    assert mi <= 3 * se + 0.01


def test_mi_additive_noise_channel():
    g = _rng(14)
    x = g.standard_normal(20_000)
    y = x + 0.5 * g.standard_normal(20_000)
    truth = 0.5 * math.log2(1.0 + 4.0)  # 1.1609...
    mi, se, flag = el.mutual_information_estimate(x, y)
    assert flag is None
    assert mi == pytest.approx(truth, abs=0.1)


def test_mi_functional_dependence_flagged():
    x = _rng(15).standard_normal(12_000)
    mi, _, flag = el.mutual_information_estimate(x, 3.0 * x)
    assert flag == "degenerate"
    assert mi > 2.0  # lower-bounded, not converged


def test_mi_validation():
    g = _rng(16)
    with pytest.raises(ValueError, match="mismatch"):
        el.mutual_information_estimate(g.standard_normal(100), g.standard_normal(99))
    with pytest.raises(ValueError, match="at least"):
        el.mutual_information_estimate(g.standard_normal(100), g.standard_normal(100))


# ---------------------------------------------------------------------------
# whiteness


def test_whiteness_passes_iid():
    report = el.whiteness_stats(_rng(17).standard_normal(20_000))
    assert report.passed()
    assert report.portmanteau_pvalue > 0.005
    assert np.max(np.abs(report.autocorrelations)) < 0.03
    assert report.mi_lag1_bits < 0.01


def test_whiteness_fails_colored_trace():
    path = el.GaussARMA(ar=(0.9,)).sample_path(20_000, seed=18)
    report = el.whiteness_stats(path)
    assert not report.passed()
    assert report.autocorrelations[0] == pytest.approx(0.9, abs=0.02)
    # lag-1 MI of a rho = 0.9 Gaussian pair: -log2(1 - 0.81)/2 = 1.198
    assert report.mi_lag1_bits == pytest.approx(1.198, abs=0.15)


def test_whiteness_mi_nan_for_short_traces():
    report = el.whiteness_stats(_rng(19).standard_normal(1_500), max_lag=10)
    assert math.isnan(report.mi_lag1_bits)
    assert math.isfinite(report.portmanteau)


def test_whiteness_validation():
    with pytest.raises(ValueError, match="at least"):
        el.whiteness_stats(np.ones(500), max_lag=10)
    with pytest.raises(ValueError, match="constant"):
        el.whiteness_stats(np.ones(2_000), max_lag=10)
    with pytest.raises(ValueError, match="max_lag"):
        el.whiteness_stats(_rng(20).standard_normal(2_000), max_lag=0)


# ---------------------------------------------------------------------------
# density fit


def test_gg_fit_accepts_matched_family():
    for p in (1.0, 2.0):
        x = el.GeneralizedGaussian(p, 1.3).sample(20_000, seed=21)
        report = el.density_fit_gg(x, p)
        assert report.passed
        assert report.threshold == pytest.approx(1.63 / math.sqrt(20_000))
        assert report.matched_scale == pytest.approx(1.3, rel=0.05)


def test_gg_fit_rejects_mismatched_family():
    x = el.GeneralizedGaussian.laplace(1.0).sample(20_000, seed=22)
    report = el.density_fit_gg(x, 2.0)
    assert not report.passed
    assert report.ks_distance > 2 * report.threshold


def test_gg_fit_validation():
    with pytest.raises(ValueError, match="100"):
        el.density_fit_gg(np.ones(50), 2.0)
    with pytest.raises(ValueError, match="degenerate"):
        el.density_fit_gg(np.zeros(200), 2.0)


# ---------------------------------------------------------------------------
# covariance determinant


def test_det_estimate_2d():
    q = np.array([[1.0, 0.2], [0.2, 0.5]])
    pts = _rng(23).multivariate_normal(np.zeros(2), q, size=50_000)
    est = el.covariance_det_estimate(pts)
    assert not est.singular
    assert est.value == pytest.approx(0.46, abs=5 * est.std_error)
    assert est.value == pytest.approx(0.46, rel=0.05)


def test_det_estimate_flags_singular():
    x = _rng(24).standard_normal(1_000)
    pts = np.column_stack([x, -x])
    est = el.covariance_det_estimate(pts)
    assert est.singular


def test_det_estimate_1d_is_second_moment():
    x = _rng(25).standard_normal(10_000)
    est = el.covariance_det_estimate(x)
    assert est.value == pytest.approx(float(np.mean(x**2)), rel=1e-12)


def test_det_estimate_needs_samples():
    with pytest.raises(ValueError, match="at least"):
        el.covariance_det_estimate(np.ones((15, 2)))


# ---------------------------------------------------------------------------
# report validation


def test_entropy_estimate_guards():
    with pytest.raises(ValueError, match="estimator_id"):
        el.EntropyEstimate(1.0, 0.1, "magic", 1000)
    with pytest.raises(ValueError, match="standard error"):
        el.EntropyEstimate(1.0, 0.0, "vasicek", 1000)
    with pytest.raises(ValueError, match="few"):
        el.EntropyEstimate(1.0, 0.1, "vasicek", 10)


def test_whiteness_report_guard():
    with pytest.raises(ValueError, match="autocorrelation"):
        el.WhitenessReport(
            autocorrelations=np.array([1.5]),
            portmanteau=1.0,
            portmanteau_pvalue=0.5,
            mi_lag1_bits=0.0,
            mi_lag1_se=0.01,
            sample_count=2_000,
        )
