import math

import numpy as np
import pytest

from core_count import APParams, SubsetSample, count_kap_naive, sample_subset, sample_subsets
from custom_exceptions import MultilinearityError, ParameterError
from decomp import (
    SigmaTable,
    biased_transform,
    closed_form_low_degrees,
    component_direct,
    component_sums_batch,
    degree_components,
    expectation,
    gaussian_component_samples,
    normalized_degrees,
    sigma_squared_exact,
    sigma_table,
)
from rng_streams import block_stream
from sigma_cache import cache_path, load_or_compute

@pytest.mark.parametrize("n", [31, 101])
@pytest.mark.parametrize("k", [3, 4])
@pytest.mark.parametrize("p", [0.3, 0.5])
def test_components_reconstruct_the_count(n, k, p):
    params = APParams(n, k)
    sigma = sigma_table(params, p)
    rng = block_stream(1, n + k)
    for _ in range(20):
        sample = sample_subset(params, p, rng)
        count = count_kap_naive(sample, params)
        comps = degree_components(biased_transform(sample, p), params, sigma)
        assert comps.total == pytest.approx(count, rel=1e-9, abs=1e-9)

@pytest.mark.parametrize("k,p", [(3, 0.3), (4, 0.5), (5, 0.7)])
def test_closed_forms_match_direct_sums(k, p):
    params = APParams(31, k)
    rng = block_stream(2, k)
    for _ in range(10):
        y = biased_transform(sample_subset(params, p, rng), p)
        kap1, kap2 = closed_form_low_degrees(y.ellsum, 31, k, p)
        assert kap1 == pytest.approx(component_direct(y, 1, params), rel=1e-9, abs=1e-9)
        assert kap2 == pytest.approx(component_direct(y, 2, params), rel=1e-9, abs=1e-9)

def test_elementary_symmetric_path_matches_direct_oracle():
    params = APParams(31, 4)
    y = biased_transform(sample_subset(params, 0.4, block_stream(4, 0)), 0.4)
    comps = degree_components(y, params)
    for ell in range(params.k + 1):
        assert comps.raw[ell] == pytest.approx(component_direct(y, ell, params), rel=1e-9, abs=1e-9)

def test_constant_term_is_the_mean():
    params = APParams(101, 3)
    y = biased_transform(SubsetSample.empty(101), 0.5)
    assert degree_components(y, params).raw[0] == pytest.approx(expectation(params, 0.5))
    assert expectation(params, 0.5) == 631.25

def test_half_bias_identity_for_3aps():
    n = 31
    params = APParams(n, 3)
    rng = block_stream(6, 0)
    for _ in range(20):
        sample = sample_subset(params, 0.5, rng)
        y = biased_transform(sample, 0.5).y
        total = y.sum()
        pairs = (total ** 2 - n) / 2.0
        triples = component_sums_batch(y[None, :], params)[0, 3]
        rhs = n * (n - 1) / 2 + 1.5 * (n - 1) * total + 3 * pairs + triples
        assert 8 * count_kap_naive(sample, params) == pytest.approx(rhs, abs=1e-8)

@pytest.mark.parametrize("n,k", [(31, 3), (101, 3), (31, 4), (37, 5)])
def test_sigma_one_closed_form(n, k):
    assert sigma_squared_exact(1, n, k) == n * (k * (n // 2)) ** 2

def test_sigma_top_degree_for_3aps_counts_each_progression_once():
    # for odd n every 3AP index set comes from exactly one (a, d)
    assert sigma_squared_exact(3, 101, 3) == 101 * 50

def test_sigma_table_values_at_flagship_parameters(sigma101):
    assert sigma101.sigma_Y ** 2 == pytest.approx(5050 / 64)
    assert sigma101.sigma_total == pytest.approx(190.5, abs=0.5)

def test_sigma_requires_multilinearity():
    with pytest.raises(MultilinearityError):
        sigma_table(APParams(9, 4), 0.5)
    with pytest.raises(MultilinearityError):
        closed_form_low_degrees(0.0, 9, 4, 0.5)

def test_degree_out_of_range():
    with pytest.raises(ParameterError):
        sigma_squared_exact(4, 31, 3)

def test_normalized_vector_skips_degree_two():
    assert normalized_degrees(3) == (1, 3)
    assert normalized_degrees(5) == (1, 3, 4, 5)

def test_gaussian_components_have_unit_variance():
    params = APParams(31, 4)
    sigma = sigma_table(params, 0.5)
    values, tail = gaussian_component_samples(params, sigma, 20_000, block_stream(8, 0))
    assert values.shape == (20_000, 3)
    assert np.all(np.abs(values.var(axis=0) - 1.0) < 0.1)
    assert abs(tail.var() - 1.0) < 0.1

def test_biased_vector_recovers_indicators():
    sample = SubsetSample.from_indices(7, [0, 4])
    y = biased_transform(sample, 0.3)
    assert np.array_equal(y.indicators(), sample.bits)

def test_sigma_cache_round_trip(tmp_path):
    params = APParams(31, 3)
    first = load_or_compute(params, 0.5, cache_dir=tmp_path)
    assert cache_path(31, 3, tmp_path).exists()
    second = load_or_compute(params, 0.3, cache_dir=tmp_path)
    assert second.sigma_squared == first.sigma_squared
    assert second.sigma_Y == pytest.approx(SigmaTable.from_squares(31, 3, 0.3, first.sigma_squared).sigma_Y)

@pytest.mark.parametrize("text", ["{not json", '{"sigma_squared": [1, 2, 3]}', "[1, 2, 3]", '{"sigma_squared": {"1": 5}}'])
def test_corrupt_sigma_cache_is_recomputed(tmp_path, text):
    cache_path(31, 3, tmp_path).write_text(text, encoding="utf-8")
    table = load_or_compute(APParams(31, 3), 0.5, cache_dir=tmp_path)
    assert table.sigma_squared[1] == 31 * 45 ** 2

@pytest.mark.parametrize("k,p", [(3, 0.5), (3, 0.3), (4, 0.5)])
def test_components_have_mean_zero_under_biased_law(k, p):
    params = APParams(31, k)
    bits = sample_subsets(params, p, block_stream(23, k), 20_000)
    Y = (bits - p) / math.sqrt(p * (1 - p))
    sums = component_sums_batch(Y, params)[:, 1:]
    se = sums.std(axis=0, ddof=1) / math.sqrt(len(sums))
    assert np.all(np.abs(sums.mean(axis=0)) <= 4 * se)

def test_normalized_components_are_orthogonal_under_gaussian_inputs():
    params = APParams(31, 4)
    sigma = sigma_table(params, 0.5)
    values, _ = gaussian_component_samples(params, sigma, 30_000, block_stream(24, 0))
    for i in range(values.shape[1]):
        for j in range(i + 1, values.shape[1]):
            product = values[:, i] * values[:, j]
            se = product.std(ddof=1) / math.sqrt(len(product))
            assert abs(product.mean()) <= 4 * se
