import math

import numpy as np
import pytest
from scipy import stats as sps

from config import (
    KS_THRESHOLD,
    L_ALPHA_CORRELATION_THRESHOLD,
    POOLED_PVALUE_THRESHOLD,
    POOLED_RATIO_THRESHOLD,
    SCAN_DEVIATION_THRESHOLD,
    TV_THRESHOLD,
)
from core_count import APParams
from custom_exceptions import ParameterError
from decomp import sigma_table
from lattice import IntervalFamily, in_L_alpha, popcount_distribution, predicted_L_probability, predicted_pmf
from rng_streams import block_stream
import stats
from stats import (
    ComponentSamples,
    ExperimentConfig,
    Histogram,
    anticoncentration,
    component_covariance,
    empirical_oscillation_constant,
    gaussian_reference,
    joint_cdf_check,
    kolmogorov_distance,
    l_alpha_estimates,
    lclt_interval_prediction,
    lclt_scan,
    run_mc,
    testfunction_check as smooth_function_check,
    total_variation,
)
from theta import ThetaEvaluator

def test_kolmogorov_distance_of_gaussian_draws():
    draws = block_stream(1, 0).standard_normal(200_000)
    assert kolmogorov_distance(draws) < 2.0 / math.sqrt(200_000)

def test_kolmogorov_distance_of_constant_samples():
    assert kolmogorov_distance(np.zeros(2000)) >= 0.5

def test_kolmogorov_distance_needs_enough_samples():
    with pytest.raises(ParameterError):
        kolmogorov_distance(np.zeros(999))

def _fake_components(values, tail):
    return ComponentSamples(degrees=(1, 3), values=values, tail=tail)

def test_joint_cdf_far_tail_proxy():
    rng = block_stream(2, 0)
    cs = _fake_components(rng.standard_normal((5000, 2)), rng.standard_normal(5000))
    assert joint_cdf_check(cs, 10.0, 10.0) <= 1e-3

def test_component_samples_refuse_degree_two():
    with pytest.raises(ParameterError):
        ComponentSamples(degrees=(1, 2), values=np.zeros((3, 2)), tail=np.zeros(3))

def test_testfunction_check_on_true_gaussians():
    rng = block_stream(3, 0)
    result = smooth_function_check(rng.standard_normal((50_000, 2)), rng.standard_normal((50_000, 2)))
    assert result.deviation <= 4 * result.standard_error

def test_single_cubic_coordinate_passes_against_normal():
    params = APParams(101, 3)
    sigma = sigma_table(params, 0.5)
    cubic = gaussian_reference(params, sigma, 20_000, block_stream(4, 0)).values[:, 1]
    normal = block_stream(4, 1).standard_normal(20_000)
    result = smooth_function_check(cubic, normal)
    assert result.deviation <= 4 * result.standard_error + 0.01

def test_lclt_interval_prediction():
    assert lclt_interval_prediction(0, 5.0) == 0.0
    sigma_z = 40.0
    size = round(math.sqrt(2 * math.pi) * sigma_z)
    assert lclt_interval_prediction(size, sigma_z) == pytest.approx(1.0, abs=0.02)
    with pytest.raises(ParameterError):
        lclt_interval_prediction(-1, 1.0)

def test_lclt_prediction_is_blind_to_phase(model101):
    # equal-size sets at peak and trough phase get equal LCLT mass but unequal lattice mass
    ev = ThetaEvaluator(model101.delta)
    B = model101.G / 8
    peak = predicted_L_probability(model101, IntervalFamily(0.0, B, 3, 1), ev).value
    trough = predicted_L_probability(model101, IntervalFamily(0.5, B, 3, 1), ev).value
    assert peak / trough > 4.0
    v = np.arange(-200, 201) - model101.x0
    sizes = [int(np.count_nonzero(in_L_alpha(model101, IntervalFamily(a, B, 3), v))) for a in (0.0, 0.5)]
    null = [lclt_interval_prediction(size, model101.sigma_total) for size in sizes]
    assert null[0] / null[1] == pytest.approx(1.0, abs=0.2)

def test_histogram_helpers():
    hist = Histogram.from_values([3, 1, 3, 2, 3])
    assert hist.total == 5
    assert hist.counts == {1: 1, 2: 1, 3: 3}
    assert hist.mean == pytest.approx(2.4)
    assert hist.std == pytest.approx(np.std([3, 1, 3, 2, 3], ddof=1))
    assert hist.expand().tolist() == [1, 2, 3, 3, 3]
    merged = hist.merge(Histogram.from_values([1, 7]))
    assert merged.total == 7 and merged.counts[1] == 2 and merged.counts[7] == 1
    assert hist.to_frame().columns.tolist() == ["value", "count"]
    assert hist.probability(3) == pytest.approx(0.6)
    assert Histogram.from_frame(hist.to_frame()) == hist

def test_histogram_merge_is_commutative():
    a, b = Histogram.from_values([1, 2, 2]), Histogram.from_values([2, 5])
    assert a.merge(b) == b.merge(a)

def test_scan_of_integerised_gaussian_is_flat(model101):
    rng = block_stream(5, 0)
    values = np.rint(rng.normal(model101.mu, model101.sigma_total, 1_000_000)).astype(np.int64)
    report = lclt_scan(Histogram.from_values(values), model101, 2 * model101.sigma_total)
    assert report.max_scaled_deviation <= 6 * report.scaled_deviation_se
    assert report.pooled["ratio"] == pytest.approx(1.0, abs=0.05)

def test_scan_rejects_bad_windows(model101):
    hist = Histogram.from_values([631])
    with pytest.raises(ParameterError):
        lclt_scan(hist, model101, 4 * model101.sigma_total)
    with pytest.raises(ParameterError):
        lclt_scan(hist, model101, 0.1)

def test_scan_records_both_phases(model101):
    hist = Histogram.from_values(np.arange(500, 760))
    report = lclt_scan(hist, model101, 100.0)
    records = report.records
    assert {"x", "p_hat", "gaussian", "scaled_deviation", "lattice_phase", "warped_phase"} <= set(records.columns)
    assert records["lattice_phase"].between(0, 1).all()
    assert records["warped_phase"].between(0, 1).all()
    assert "records" in report.to_dict()

def test_total_variation_against_itself():
    hist = Histogram.from_values([1, 2, 2, 3])
    assert total_variation(hist, hist.probability, (0, 4)) == 0.0
    assert total_variation(hist, np.zeros(5), (0, 4)) == pytest.approx(0.5)

def test_anticoncentration():
    result = anticoncentration(Histogram.from_values([5, 5, 6, 7]), 10)
    assert result["max_point_probability"] == 0.5
    assert result["argmax"] == 5
    assert result["scaled"] == pytest.approx(0.5 * 10 ** 1.5)

def test_run_mc_is_independent_of_shard_count():
    one = run_mc(ExperimentConfig(n=31, k=3, p=0.5, num_samples=20_000, seed=9, shards=1))
    two = run_mc(ExperimentConfig(n=31, k=3, p=0.5, num_samples=20_000, seed=9, shards=2))
    assert one[0] == two[0]
    assert one[0].total == 20_000
    assert max(one[0].counts) <= 31 * 15 and min(one[0].counts) >= 0

def test_run_mc_mean_matches_expectation():
    hist, _, summary = run_mc(ExperimentConfig(n=31, k=3, p=0.5, num_samples=40_000, seed=10))
    sigma = sigma_table(APParams(31, 3), 0.5)
    assert abs(summary.mean - 0.125 * 31 * 15) < 4 * sigma.sigma_total / math.sqrt(40_000)
    assert summary.std == pytest.approx(sigma.sigma_total, rel=0.03)
    assert summary.popcount_mean == pytest.approx(15.5, abs=0.05)

def test_component_covariance_is_near_identity():
    _, cs, _ = run_mc(ExperimentConfig(n=31, k=4, p=0.5, num_samples=20_000, seed=11, record_components=True))
    assert cs.degrees == (1, 3, 4)
    cov = component_covariance(cs)
    assert np.all(np.abs(np.diag(cov) - 1.0) < 0.1)
    off = cov[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) < 0.05)

def test_joint_cdf_at_origin_for_recorded_components():
    _, cs, _ = run_mc(ExperimentConfig(n=101, k=3, p=0.5, num_samples=20_000, seed=12, record_components=True))
    assert joint_cdf_check(cs, 0.0, 0.0) <= 0.04

@pytest.mark.slow
def test_flagship_reproduction(model101):
    hist, _, summary = run_mc(ExperimentConfig(n=101, k=3, p=0.5, num_samples=1_000_000, seed=20210101, shards=4))
    assert abs(summary.mean - 631.25) < 3 * model101.sigma_total / 1000
    assert summary.std == pytest.approx(model101.sigma_total, rel=0.015)
    assert kolmogorov_distance((hist.expand() - model101.mu) / model101.sigma_total) <= KS_THRESHOLD

    report = lclt_scan(hist, model101, 2 * model101.sigma_total)
    assert report.max_scaled_deviation >= SCAN_DEVIATION_THRESHOLD
    assert report.pooled["ratio"] >= POOLED_RATIO_THRESHOLD
    assert report.pooled["p_value"] < POOLED_PVALUE_THRESHOLD
    assert empirical_oscillation_constant(hist, model101, 2 * model101.sigma_total) > 2.0

    ev = ThetaEvaluator(model101.delta)
    B = model101.G / 8
    profile = l_alpha_estimates(hist, model101, [round(0.1 * i, 1) for i in range(10)], B, 3)
    predicted = [predicted_L_probability(model101, IntervalFamily(a, B, 3, 1), ev).value for a in profile["alpha"]]
    assert np.corrcoef(profile["estimate"], predicted)[0, 1] >= L_ALPHA_CORRELATION_THRESHOLD
    assert profile["estimate"].max() / profile["estimate"].min() >= 2.0

    window = report.window
    binom = popcount_distribution(model101)
    assert total_variation(hist, lambda x: predicted_pmf(model101, binom, x), window) <= TV_THRESHOLD

@pytest.mark.slow
def test_component_acceptance_at_101():
    _, cs, _ = run_mc(ExperimentConfig(n=101, k=3, p=0.5, num_samples=100_000, seed=13, record_components=True))
    cov = component_covariance(cs)
    assert np.all(np.abs(np.diag(cov) - 1.0) < 0.1)
    assert abs(cov[0, 1]) < 0.05
    assert joint_cdf_check(cs, 0.0, 0.0) <= 0.02

@pytest.mark.slow
def test_testfunction_deviation_shrinks_with_n():
    deviations = {}
    for n in (31, 101):
        params = APParams(n, 3)
        sigma = sigma_table(params, 0.3)
        total, variance = 0.0, 0.0
        for seed in range(5):
            _, cs, _ = run_mc(ExperimentConfig(n=n, k=3, p=0.3, num_samples=100_000, seed=100 + seed,
                                               record_components=True), sigma)
            reference = gaussian_reference(params, sigma, 100_000, block_stream(200 + seed, n))
            result = smooth_function_check(cs, reference)
            total += result.deviation
            variance += result.standard_error ** 2
        deviations[n] = (total / 5, math.sqrt(variance) / 5)
    (d31, se31), (d101, se101) = deviations[31], deviations[101]
    assert d31 - d101 > 3 * math.hypot(se31, se101)

def test_documented_sigmoid_derivative_bounds():
    v = np.linspace(-8.0, 8.0, 20001)
    th = np.tanh(v)
    first = (1 - th ** 2) / 2
    second = -th * (1 - th ** 2)
    third = (1 - th ** 2) * (3 * th ** 2 - 1)
    assert first.max() <= stats.SIGMOID_FIRST_DERIVATIVE_BOUND + 1e-12
    assert np.abs(second).max() <= stats.SIGMOID_SECOND_DERIVATIVE_BOUND + 1e-12
    assert np.abs(third).max() <= stats.SIGMOID_THIRD_DERIVATIVE_BOUND + 1e-12

def test_empirical_oscillation_constant_is_a_ratio_of_phase_means(model101):
    x = np.arange(450, 813)
    phase = stats.warped_phase(model101, x)
    peak, _ = stats._phase_masks(phase)
    weight = np.where(peak, 3.0, 1.0)
    dens = sps.norm.pdf(x, loc=model101.mu, scale=model101.sigma_total)
    counts = np.rint(1e12 * dens * weight).astype(np.int64)
    hist = Histogram(counts={int(v): int(c) for v, c in zip(x, counts)}, total=int(counts.sum()))
    assert empirical_oscillation_constant(hist, model101, 150.0) == pytest.approx(3.0, rel=1e-6)

def _modulated_histogram(model, factor, num, seed):
    """Poisson counts from phi(x) times `factor` at peak-phase integers."""
    x = np.arange(math.ceil(model.mu - 3 * model.sigma_total), math.floor(model.mu + 3 * model.sigma_total) + 1)
    peak, _ = stats._phase_masks(stats.warped_phase(model, x))
    pmf = sps.norm.pdf(x, loc=model.mu, scale=model.sigma_total) * np.where(peak, factor, 1.0)
    pmf /= pmf.sum()
    counts = block_stream(seed, 0).poisson(num * pmf)
    return Histogram(counts={int(v): int(c) for v, c in zip(x, counts) if c}, total=int(counts.sum()))

def test_pooled_statistics_are_stable_under_lattice_shifts(model101):
    hist = _modulated_histogram(model101, 3.0, 1_000_000, 25)
    records = lclt_scan(hist, model101, 2 * model101.sigma_total).records
    counts = np.rint(records["p_hat"].to_numpy() * hist.total).astype(np.int64)
    half, shift = 2 * model101.G, round(2 * model101.G)
    ratios = []
    for centre in (model101.mu, model101.mu + shift, model101.mu - shift):
        inside = (np.abs(records["x"] - centre) <= half).to_numpy()
        pooled = stats._pooled(counts[inside], records["gaussian"].to_numpy()[inside],
                               records["warped_phase"].to_numpy()[inside], hist.total)
        ratios.append(pooled["ratio"])
    assert all(r == pytest.approx(3.0, abs=0.2) for r in ratios)
    assert max(ratios) - min(ratios) <= 0.2

@pytest.mark.slow
def test_joint_cdf_deviation_does_not_grow_with_n():
    num = 50_000
    band = 3 * math.sqrt(2 * 0.25 * 0.75 / num)
    deviations = []
    for n in (31, 61, 101, 201):
        _, cs, _ = run_mc(ExperimentConfig(n=n, k=3, p=0.5, num_samples=num, seed=300 + n, record_components=True))
        deviations.append(joint_cdf_check(cs, 0.0, 0.0))
    assert all(later <= earlier + band for earlier, later in zip(deviations, deviations[1:]))
