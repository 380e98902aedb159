# stats.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Distributional verdicts on Monte Carlo output: CLT-side checks (Kolmogorov
distance, joint CDF, smooth test function, component covariance) and the
local-limit side (the deviation scan, L_alpha estimates, the density model
comparison).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats as sps

from config import PEAK_PHASE_EDGE, TROUGH_PHASE_EDGES
from custom_exceptions import ParameterError
from decomp import gaussian_component_samples, normalized_degrees
from experiment_engine import ComponentSamples, ExperimentConfig, Histogram, MCSummary, run_mc
from lattice import IntervalFamily, a_t, in_L_alpha, monotone_radius

logger = logging.getLogger(__name__)

__all__ = [
    "ComponentSamples", "ExperimentConfig", "Histogram", "MCSummary", "run_mc",
    "kolmogorov_distance", "joint_cdf_check", "testfunction_check", "lclt_scan",
    "lclt_interval_prediction", "l_alpha_estimates", "total_variation",
    "component_covariance", "anticoncentration", "empirical_oscillation_constant",
    "gaussian_reference",
]

# Bounds of s(v) = (1 + tanh v) / 2, the factor of the built-in test function
SIGMOID_FIRST_DERIVATIVE_BOUND = 0.5
SIGMOID_SECOND_DERIVATIVE_BOUND = 2.0 / (3.0 * math.sqrt(3.0))
SIGMOID_THIRD_DERIVATIVE_BOUND = 1.0

MIN_KOLMOGOROV_SAMPLES = 1000

def kolmogorov_distance(samples):
    """
    sup_x |F_N(x) - Phi(x)| for already normalised samples.

    Raises:
        ParameterError: With fewer than 1000 samples.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size < MIN_KOLMOGOROV_SAMPLES:
        raise ParameterError(f"Kolmogorov distance needs at least {MIN_KOLMOGOROV_SAMPLES} samples, "
                             f"got {samples.size}.")
    return float(sps.kstest(samples, "norm").statistic)

def _matrix(samples):
    if isinstance(samples, ComponentSamples):
        return samples.values
    arr = np.asarray(samples, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr

def joint_cdf_check(cs, a, b):
    """|P_hat[kAP^1_norm < a, Y / sigma_Y < b] - Phi(a) Phi(b)|."""
    first = cs.values[:, 0]
    joint = float(np.mean((first < a) & (cs.tail < b)))
    return abs(joint - sps.norm.cdf(a) * sps.norm.cdf(b))

def smooth_bump(values):
    """g(v) = prod_i (1 + tanh v_i) / 2, evaluated row-wise."""
    return np.prod((1.0 + np.tanh(values)) / 2.0, axis=1)

@dataclass(frozen=True)
class TestFunctionCheck:
    __test__ = False

    deviation: float
    standard_error: float

    @property
    def within_noise(self):
        return self.deviation <= 3.0 * self.standard_error

def testfunction_check(cs, gaussian_reference):
    """
    Compares the mean of the smooth bump g over the component samples with
    its mean over a Gaussian reference of the same dimension.

    Every factor of g has |s'| <= 1/2, |s''| <= 2/(3 sqrt 3) and
    |s'''| <= 1, so the derivative tensors of g are bounded by the same
    constants times powers of the dimension.

    Args:
        cs (ComponentSamples or numpy.ndarray): Samples under test.
        gaussian_reference (ComponentSamples or numpy.ndarray): Standard normal reference.

    Returns:
        TestFunctionCheck: Absolute difference of means and its standard error.
    """
    sample = _matrix(cs)
    reference = _matrix(gaussian_reference)
    if sample.shape[1] != reference.shape[1]:
        raise ParameterError(f"Dimension mismatch: {sample.shape[1]} vs {reference.shape[1]}.")
    g_sample = smooth_bump(sample)
    g_reference = smooth_bump(reference)
    deviation = abs(float(g_sample.mean() - g_reference.mean()))
    se = math.sqrt(g_sample.var(ddof=1) / g_sample.size + g_reference.var(ddof=1) / g_reference.size)
    return TestFunctionCheck(deviation=deviation, standard_error=se)

def gaussian_reference(params, sigma, num, rng):
    """ComponentSamples of the normalised components under i.i.d. standard normal inputs."""
    values, tail = gaussian_component_samples(params, sigma, num, rng)
    return ComponentSamples(degrees=normalized_degrees(params.k), values=values, tail=tail)

def component_covariance(cs):
    """Empirical covariance of the normalised component vector (identity in the limit)."""
    return np.atleast_2d(np.cov(cs.values, rowvar=False))

def lattice_phase(model, x):
    """((x - mu - x0) mod G) / G."""
    v = np.asarray(x, dtype=np.float64) - model.mu - model.x0
    return np.mod(v, model.G) / model.G

def warped_phase(model, x):
    """
    Position of x - mu - x0 between the consecutive lattice values A_t and
    A_{t+1} (0 at A_t). NaN outside the monotone radius.
    """
    v = np.asarray(x, dtype=np.float64) - model.mu - model.x0
    radius = monotone_radius(model)
    anchors = a_t(model, np.arange(-radius, radius + 1))
    cell = np.searchsorted(anchors, v, side="right") - 1
    inside = (cell >= 0) & (cell < anchors.size - 1)
    safe = np.clip(cell, 0, anchors.size - 2)
    phase = (v - anchors[safe]) / (anchors[safe + 1] - anchors[safe])
    return np.where(inside, phase, np.nan)

def _phase_masks(phase):
    lo, hi = TROUGH_PHASE_EDGES
    with np.errstate(invalid="ignore"):
        peak = (phase <= PEAK_PHASE_EDGE) | (phase >= 1.0 - PEAK_PHASE_EDGE)
        trough = (phase >= lo) & (phase <= hi)
    return peak, trough

def _pooled(counts, gaussian, phase, total):
    peak, trough = _phase_masks(phase)
    n_peak, n_trough = int(peak.sum()), int(trough.sum())
    peak_count, trough_count = int(counts[peak].sum()), int(counts[trough].sum())
    pooled = {
        "peak_integers": n_peak,
        "trough_integers": n_trough,
        "peak_mass": peak_count / total,
        "trough_mass": trough_count / total,
        "ratio": float("nan"),
        "null_fraction": float("nan"),
        "p_value": float("nan"),
    }
    if n_peak == 0 or n_trough == 0:
        return pooled
    # observed peak:trough mass over the same ratio under the smooth Gaussian
    null_peak, null_trough = gaussian[peak].sum(), gaussian[trough].sum()
    if trough_count > 0:
        pooled["ratio"] = (peak_count / trough_count) / (null_peak / null_trough)
    else:
        pooled["ratio"] = float("inf")
    null_fraction = null_peak / (null_peak + null_trough)
    pooled["null_fraction"] = float(null_fraction)
    if peak_count + trough_count > 0:
        test = sps.binomtest(peak_count, peak_count + trough_count, null_fraction, alternative="greater")
        pooled["p_value"] = float(test.pvalue)
    return pooled

@dataclass
class ScanReport:
    """Per-integer deviations and pooled phase statistics of one scan."""
    records: pd.DataFrame
    window: tuple
    max_scaled_deviation: float
    argmax: int
    scaled_deviation_se: float
    pooled: dict
    pooled_lattice_phase: dict
    phase_edges: dict = field(default_factory=lambda: {
        "peak": PEAK_PHASE_EDGE, "trough": list(TROUGH_PHASE_EDGES)})

    def to_dict(self):
        return {
            "window": list(self.window),
            "max_scaled_deviation": self.max_scaled_deviation,
            "argmax": self.argmax,
            "scaled_deviation_se": self.scaled_deviation_se,
            "pooled": self.pooled,
            "pooled_lattice_phase": self.pooled_lattice_phase,
            "phase_edges": self.phase_edges,
            "records": self.records.to_dict(orient="records"),
        }

def lclt_scan(hist, model, window_halfwidth):
    """
    Compares the empirical point probabilities with the Gaussian density
    phi(x; mu, sigma) on every integer of [mu - w, mu + w].

    Pooled statistics sum the empirical mass at integers whose warped phase
    is near a lattice value (peak) or halfway between two (trough); the
    binomial test asks whether the peak share exceeds what the smooth
    Gaussian would give the same integers. The plain mod-G phase is
    reported alongside.

    Args:
        hist (Histogram): Monte Carlo histogram.
        model (LatticeModel): Supplies mu, sigma, x0, G and the A_t.
        window_halfwidth (float): w, at most 3 sigma.

    Returns:
        ScanReport: Per-integer records and pooled statistics.

    Raises:
        ParameterError: If the window is empty or wider than 3 sigma.
    """
    mu, sigma = model.mu, model.sigma_total
    if window_halfwidth > 3.0 * sigma:
        raise ParameterError(f"Window half-width {window_halfwidth} exceeds 3 sigma = {3 * sigma:.2f}.")
    lo, hi = math.ceil(mu - window_halfwidth), math.floor(mu + window_halfwidth)
    if window_halfwidth < 0 or hi < lo:
        raise ParameterError(f"Scan window [{mu - window_halfwidth}, {mu + window_halfwidth}] holds no integer.")

    x = np.arange(lo, hi + 1, dtype=np.int64)
    counts = np.array([hist.counts.get(int(v), 0) for v in x], dtype=np.int64)
    p_hat = counts / hist.total
    gaussian = sps.norm.pdf(x, loc=mu, scale=sigma)
    scaled = sigma * np.abs(p_hat - gaussian)
    records = pd.DataFrame({
        "x": x,
        "p_hat": p_hat,
        "gaussian": gaussian,
        "scaled_deviation": scaled,
        "lattice_phase": lattice_phase(model, x),
        "warped_phase": warped_phase(model, x),
    })
    best = int(np.argmax(scaled))
    report = ScanReport(
        records=records,
        window=(int(lo), int(hi)),
        max_scaled_deviation=float(scaled[best]),
        argmax=int(x[best]),
        scaled_deviation_se=float(sigma * math.sqrt(gaussian.max() / hist.total)),
        pooled=_pooled(counts, gaussian, records["warped_phase"].to_numpy(), hist.total),
        pooled_lattice_phase=_pooled(counts, gaussian, records["lattice_phase"].to_numpy(), hist.total),
    )
    logger.info(f"LCLT scan on [{lo}, {hi}]: max scaled deviation {report.max_scaled_deviation:.4f} "
                f"at x={report.argmax}, pooled ratio {report.pooled['ratio']:.3f}")
    return report

def lclt_interval_prediction(set_size, sigma_Z):
    """|S| / (sqrt(2 pi) sigma_Z): what a variable obeying the local limit law gives a central set S."""
    if set_size < 0:
        raise ParameterError(f"Set size must be non-negative, got {set_size}.")
    if not sigma_Z > 0:
        raise ParameterError(f"sigma_Z must be positive, got {sigma_Z}.")
    return set_size / (math.sqrt(2.0 * math.pi) * sigma_Z)

def l_alpha_estimates(hist, model, alphas, B, s):
    """
    Empirical P[X + Y in L_alpha(B, s)] for each alpha, using X + Y = kAP - mu - x0.

    Returns:
        pandas.DataFrame: columns alpha, estimate, standard_error.
    """
    v = hist.values - model.mu - model.x0
    freqs = hist.frequencies
    rows = []
    for alpha in alphas:
        fam = IntervalFamily(alpha=float(alpha), B=B, s=s)
        share = float(freqs[in_L_alpha(model, fam, v)].sum() / hist.total)
        rows.append({
            "alpha": float(alpha),
            "estimate": share,
            "standard_error": math.sqrt(share * (1.0 - share) / hist.total),
        })
    return pd.DataFrame(rows)

def total_variation(hist, pmf, window):
    """
    1/2 sum_{x in window} |p_hat(x) - pmf(x)|.

    Args:
        hist (Histogram): Empirical distribution.
        pmf (callable or array-like): Model probabilities, either a function
            of an integer array or values aligned with the window.
        window (tuple): Inclusive integer bounds (lo, hi).
    """
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ParameterError(f"Empty window ({lo}, {hi}).")
    x = np.arange(lo, hi + 1)
    model_values = np.asarray(pmf(x) if callable(pmf) else pmf, dtype=np.float64)
    if model_values.shape != x.shape:
        raise ParameterError(f"Model values have shape {model_values.shape}, window has {x.size} integers.")
    return 0.5 * float(np.abs(hist.probability(x) - model_values).sum())

def anticoncentration(hist, n):
    """Largest point probability and its n^(3/2) scaling."""
    freqs = hist.frequencies
    best = int(np.argmax(freqs))
    top = float(freqs[best] / hist.total)
    return {"max_point_probability": top, "argmax": int(hist.values[best]), "scaled": top * n ** 1.5}

def empirical_oscillation_constant(hist, model, window_halfwidth):
    """
    Mean envelope-normalised mass p_hat / phi at peak-phase integers over
    the same mean at trough-phase integers, inside the central window. The
    measured counterpart of the theta max/min ratio; NaN without troughs.
    """
    mu, sigma = model.mu, model.sigma_total
    x = np.arange(math.ceil(mu - window_halfwidth), math.floor(mu + window_halfwidth) + 1)
    if x.size == 0:
        raise ParameterError("Empty window.")
    relative = hist.probability(x) / sps.norm.pdf(x, loc=mu, scale=sigma)
    peak, trough = _phase_masks(warped_phase(model, x))
    if not peak.any() or not trough.any() or relative[trough].mean() == 0:
        return float("nan")
    return float(relative[peak].mean() / relative[trough].mean())
