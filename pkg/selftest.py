# selftest.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Quick invariant suite. Each section exercises one module on small inputs
and prints a ✅ or ❌ line per check; `kap-lab selftest` exits non-zero
when anything fails.
"""

import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from core_count import (
    APParams,
    SubsetSample,
    count_3ap_convolution,
    count_kap_naive,
    flip_delta,
    sample_subset,
)
from decomp import biased_transform, closed_form_low_degrees, component_direct, degree_components, sigma_table
from lattice import IntervalFamily, a_t, build_lattice_model, monotone_radius, sandwich_trials
from rng_streams import block_stream
from theta import ThetaEvaluator, extremal_ratio, f_direct, f_fourier, parseval_quadrature, variance_lower_bound

logger = logging.getLogger(__name__)

SELFTEST_SEED = 424242

@dataclass
class CheckResult:
    section: str
    name: str
    passed: bool
    detail: str = ""

@dataclass
class SelftestReport:
    results: list = field(default_factory=list)

    @property
    def failed(self):
        return [f"{r.section}/{r.name}" for r in self.results if not r.passed]

    @property
    def ok(self):
        return not self.failed

    def to_dict(self):
        return {
            "passed": sum(r.passed for r in self.results),
            "failed": self.failed,
            "checks": [vars(r) for r in self.results],
        }

def print_header(title, out):
    print(f"\n{'=' * 60}", file=out)
    print(f" {title}", file=out)
    print(f"{'=' * 60}", file=out)

def _run(report, section, name, check, out):
    """Runs one check; any exception counts as a failure."""
    try:
        passed, detail = check()
    except Exception as e:
        passed, detail = False, f"{type(e).__name__}: {e}"
    report.results.append(CheckResult(section, name, bool(passed), detail))
    mark = "✅" if passed else "❌"
    print(f"{mark} {name}" + (f" ({detail})" if detail else ""), file=out)
    if not passed:
        logger.error(f"Selftest check {section}/{name} failed: {detail}")

# --- core_count ---

def _check_counting_oracles():
    rng = block_stream(SELFTEST_SEED, 0)
    for n in (7, 31, 101):
        params = APParams(n, 3)
        for _ in range(50):
            sample = sample_subset(params, 0.5, rng)
            if count_3ap_convolution(sample, params) != count_kap_naive(sample, params):
                return False, f"mismatch at n={n}"
    return True, "convolution = naive on 150 subsets"

def _check_full_set():
    params = APParams(5, 3)
    count = count_kap_naive(SubsetSample.full(5), params)
    return count == 10, f"n=5 full set counts {count}"

def _check_flip_delta():
    rng = block_stream(SELFTEST_SEED, 1)
    params = APParams(31, 4)
    for _ in range(20):
        sample = sample_subset(params, 0.4, rng)
        t = int(rng.integers(0, 31))
        expected = count_kap_naive(sample.toggled(t), params) - count_kap_naive(sample, params)
        if flip_delta(sample, t, params) != expected:
            return False, f"t={t}"
    return True, ""

# --- decomp ---

def _check_reconstruction():
    rng = block_stream(SELFTEST_SEED, 2)
    for k, p in ((3, 0.3), (4, 0.5)):
        params = APParams(31, k)
        sigma = sigma_table(params, p)
        for _ in range(10):
            sample = sample_subset(params, p, rng)
            y = biased_transform(sample, p)
            comps = degree_components(y, params, sigma)
            count = count_kap_naive(sample, params)
            if abs(comps.total - count) > 1e-9 * max(1, count):
                return False, f"k={k}: {comps.total} vs {count}"
            kap1, kap2 = closed_form_low_degrees(y.ellsum, params.n, k, p)
            if abs(kap1 - component_direct(y, 1, params)) > 1e-9 * max(1.0, abs(kap1)):
                return False, "kAP^1 closed form"
            if abs(kap2 - component_direct(y, 2, params)) > 1e-9 * max(1.0, abs(kap2)):
                return False, "kAP^2 closed form"
    return True, "n=31, k in {3, 4}"

def _check_sigma_one():
    for n, k in ((31, 3), (101, 3), (31, 4)):
        table = sigma_table(APParams(n, k), 0.5)
        if table.sigma_squared[1] != n * (k * (n // 2)) ** 2:
            return False, f"n={n}, k={k}"
    return True, "sigma_1^2 = n (k floor(n/2))^2"

# --- lattice ---

def _check_delta():
    model = build_lattice_model(101, 3, 0.5, sigma_table(APParams(101, 3), 0.5))
    return abs(model.delta - 101.0 / 900.0) < 1e-12, f"delta(101) = {model.delta:.12f}"

def _check_lattice_identity():
    params = APParams(101, 3)
    sigma = sigma_table(params, 0.5)
    model = build_lattice_model(101, 3, 0.5, sigma)
    rng = block_stream(SELFTEST_SEED, 3)
    for _ in range(20):
        sample = sample_subset(params, 0.5, rng)
        comps = degree_components(biased_transform(sample, 0.5), params, sigma)
        x = comps.raw[1] + comps.raw[2] - model.x0
        expected = a_t(model, sample.popcount - model.popcount_mode)
        if abs(x - expected) > 1e-8 * max(1.0, abs(expected)):
            return False, f"X={x} vs A_t={expected}"
    t = np.arange(-1000, 1001)
    slack = np.abs(a_t(model, t) - t * model.G) - model.C2 * (t ** 2 + np.abs(t)) / (model.p * model.q)
    if slack.max() > 1e-9 * model.G * 1000:
        return False, "|A_t - tG| bound"
    return True, "X = A_t and |A_t - tG| <= C2 (t^2 + |t|)/pq"

def _check_sandwich():
    params = APParams(1001, 3)
    model = build_lattice_model(1001, 3, 0.5, sigma_table(params, 0.5))
    fam = IntervalFamily(alpha=0.3, B=60.0, s=4, eta=2)
    tally = sandwich_trials(model, fam, 2000, block_stream(SELFTEST_SEED, 4))
    violations = tally["lower_violations"] + tally["upper_violations"]
    return violations == 0, f"{violations} violations in {tally['trials']} trials, radius {monotone_radius(model)}"

# --- theta ---

def _check_theta_dual():
    grid = np.linspace(0.0, 1.0, 1001)
    worst = 0.0
    for delta in (1.0 / 9.0, 1.0, 5.0):
        ev = ThetaEvaluator(delta)
        worst = max(worst, float(np.abs(f_direct(grid, ev) - f_fourier(grid, ev)).max()))
    return worst <= 1e-12, f"max gap {worst:.2e}"

def _check_theta_constant():
    _, _, ratio = extremal_ratio(ThetaEvaluator(1.0 / 9.0))
    return abs(ratio - 4.745) <= 0.005, f"C(1/9) = {ratio:.4f}"

def _check_parseval():
    ev = ThetaEvaluator(1.0 / 9.0)
    series = variance_lower_bound(ev)
    return abs(2.0 * series - parseval_quadrature(ev)) <= 1e-10, f"one-sided series {series:.6e}"

SECTIONS = [
    ("CORE COUNT", [
        ("counting oracle equivalence", _check_counting_oracles),
        ("full set of Z/5Z", _check_full_set),
        ("flip delta", _check_flip_delta),
    ]),
    ("DECOMPOSITION", [
        ("reconstruction and closed forms", _check_reconstruction),
        ("sigma_1 closed form", _check_sigma_one),
    ]),
    ("LATTICE", [
        ("delta finite-n form", _check_delta),
        ("lattice identity and A_t bound", _check_lattice_identity),
        ("sandwich inclusions at n=1001", _check_sandwich),
    ]),
    ("THETA", [
        ("dual representation", _check_theta_dual),
        ("C(1/9) = 4.745", _check_theta_constant),
        ("Parseval identity", _check_parseval),
    ]),
]

def run_selftest(out=None):
    """
    Runs every section and returns the report; printing goes to `out`
    (stdout by default).
    """
    out = out or sys.stdout
    print("🔍 kAP lab selftest", file=out)
    report = SelftestReport()
    for title, checks in SECTIONS:
        print_header(title, out)
        for name, check in checks:
            _run(report, title.lower(), name, check, out)
    print_header("SUMMARY", out)
    passed = sum(r.passed for r in report.results)
    print(f"{passed}/{len(report.results)} checks passed", file=out)
    logger.info(f"Selftest finished: {passed}/{len(report.results)} passed")
    return report
