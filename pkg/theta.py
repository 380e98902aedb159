# theta.py
# Date: 2026-10-19
# Version: 1.0.0

"""
The periodic theta profile f_delta(x) = sum_lambda exp(-(x - lambda)^2 / delta),
in its direct form and its Fourier form

    f_delta(x) = sqrt(pi delta) (1 + 2 sum_{m>=1} exp(-pi^2 m^2 delta) cos(2 pi m x)).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from config import PARSEVAL_TOLERANCE, THETA_EPS, THETA_FLAT_AMPLITUDE, THETA_GRID_POINTS
from custom_exceptions import NumericalError, ParameterError

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class ThetaEvaluator:
    """
    Truncation radii for both representations of f_delta at accuracy eps.

    Direct form: a term with |x - lambda| > L is below exp(-L^2/delta); with
    L^2 >= delta ln(10/eps) each discarded term is under eps/10 and the
    discarded terms decay geometrically beyond the +2 margin.
    Fourier form: the m-th term is bounded by 2 sqrt(pi delta) exp(-pi^2 m^2 delta);
    M >= sqrt(ln(20 sqrt(pi delta)/eps) / (pi^2 delta)) puts it under eps/10.
    """
    delta: float
    eps: float = THETA_EPS
    lambda_cut: int = field(init=False)
    freq_cut: int = field(init=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"Theta parameter delta must be positive, got {self.delta!r}.")
        if not 0 < self.eps < 1:
            raise ParameterError(f"Accuracy eps must lie in (0, 1), got {self.eps!r}.")
        delta = float(self.delta)
        lambda_cut = math.ceil(math.sqrt(delta * math.log(10.0 / self.eps))) + 2
        head = max(math.log(20.0 * math.sqrt(math.pi * delta) / self.eps), 1.0)
        freq_cut = math.ceil(math.sqrt(head / (math.pi ** 2 * delta))) + 2
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "lambda_cut", lambda_cut)
        object.__setattr__(self, "freq_cut", freq_cut)

    @property
    def mean(self):
        """The zeroth Fourier coefficient sqrt(pi delta)."""
        return math.sqrt(math.pi * self.delta)

    def oscillation(self, x):
        """sum_{m>=1} exp(-pi^2 m^2 delta) cos(2 pi m x); f = mean (1 + 2 oscillation)."""
        x = np.asarray(x, dtype=np.float64)
        m = np.arange(1, self.freq_cut + 1, dtype=np.float64)
        weights = np.exp(-(math.pi ** 2) * m ** 2 * self.delta)
        return np.cos(2.0 * math.pi * np.multiply.outer(x, m)) @ weights

    def __call__(self, x):
        return f_direct(x, self)

def f_direct(x, ev):
    """
    f_delta by summing the Gaussians centred within lambda_cut of x.

    Args:
        x (float or numpy.ndarray): Evaluation point(s).
        ev (ThetaEvaluator): Parameter and truncation.

    Returns:
        float or numpy.ndarray: f_delta(x) to absolute accuracy eps.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    offsets = np.arange(-ev.lambda_cut, ev.lambda_cut + 1, dtype=np.float64)
    centres = np.rint(x_arr)[..., None] + offsets
    values = np.exp(-((x_arr[..., None] - centres) ** 2) / ev.delta).sum(axis=-1)
    return float(values) if values.ndim == 0 else values

def f_fourier(x, ev):
    """f_delta from its cosine series, truncated at freq_cut."""
    values = ev.mean * (1.0 + 2.0 * ev.oscillation(x))
    return float(values) if np.ndim(values) == 0 else values

def _refine(func, centre, half_width):
    """Golden-section minimum of func bracketed around a grid point."""
    result = optimize.minimize_scalar(
        func, bracket=(centre - half_width, centre, centre + half_width), method="golden")
    return float(result.x)

def _circular_distance(x, target):
    gap = abs((x - target) % 1.0)
    return min(gap, 1.0 - gap)

def log_f_direct(x, ev):
    """log f_delta from the direct sum, finite even where f_delta underflows."""
    x_arr = np.asarray(x, dtype=np.float64)
    offsets = np.arange(-ev.lambda_cut, ev.lambda_cut + 1, dtype=np.float64)
    centres = np.rint(x_arr)[..., None] + offsets
    values = special.logsumexp(-((x_arr[..., None] - centres) ** 2) / ev.delta, axis=-1)
    return float(values) if np.ndim(values) == 0 else values

def extremal_ratio(ev):
    """
    Locates the maximum and minimum of f_delta over one period and returns
    C = f(x_max) / f(x_min).

    A 4096-point grid, then golden-section refinement around the best grid
    points. Sharp profiles are searched on log f; nearly constant ones on the
    oscillating part of the cosine series, where log f has no resolution.
    C itself is exp(log f(x_max) - log f(x_min)).

    Returns:
        tuple: (x_max, x_min, C) with x_max and x_min reduced to [0, 1).

    Raises:
        NumericalError: If the extrema are not at the integers and half-integers.
    """
    if math.exp(-(math.pi ** 2) * ev.delta) > THETA_FLAT_AMPLITUDE:
        def profile(x):
            return log_f_direct(x, ev)
    else:
        profile = ev.oscillation
    grid = np.arange(THETA_GRID_POINTS) / THETA_GRID_POINTS
    wave = profile(grid)
    step = 1.0 / THETA_GRID_POINTS
    x_max = _refine(lambda x: -float(profile(x)), grid[int(np.argmax(wave))], step) % 1.0
    x_min = _refine(lambda x: float(profile(x)), grid[int(np.argmin(wave))], step) % 1.0
    spread = float(wave.max() - wave.min())
    if spread > 0 and (_circular_distance(x_max, 0.0) > 1e-4 or _circular_distance(x_min, 0.5) > 1e-4):
        raise NumericalError(f"Theta extrema at {x_max:.6f} / {x_min:.6f} for delta={ev.delta}; "
                             f"expected 0 and 1/2.")
    ratio = math.exp(log_f_direct(x_max, ev) - log_f_direct(x_min, ev))
    logger.debug(f"delta={ev.delta}: x_max={x_max:.6f}, x_min={x_min:.6f}, C={ratio:.6f}")
    return x_max, x_min, ratio

def variance_lower_bound(ev):
    """
    The one-sided coefficient sum sum_{m>=1} f_hat(m)^2 = sum_{m>=1} pi delta exp(-2 pi^2 m^2 delta).

    Frequencies +m and -m both contribute to the variance, so Parseval gives
    integral_0^1 (f - sqrt(pi delta))^2 dx = 2 * series. That identity is
    checked against trapezoidal quadrature of the direct form (spectrally
    accurate for a smooth periodic integrand).

    Returns:
        float: The one-sided series, half the variance and positive for every delta.

    Raises:
        NumericalError: If series and quadrature disagree by more than the tolerance.
    """
    m = np.arange(1, ev.freq_cut + 1, dtype=np.float64)
    terms = math.pi * ev.delta * np.exp(-2.0 * math.pi ** 2 * m ** 2 * ev.delta)
    series = math.fsum(terms.tolist())
    quadrature = parseval_quadrature(ev)
    if abs(2.0 * series - quadrature) > max(10 * ev.eps, PARSEVAL_TOLERANCE):
        raise NumericalError(f"Parseval mismatch for delta={ev.delta}: series={series!r}, "
                             f"quadrature={quadrature!r}.")
    return series

def parseval_quadrature(ev, points=THETA_GRID_POINTS):
    """integral_0^1 (f - sqrt(pi delta))^2 dx by the trapezoidal rule; twice variance_lower_bound."""
    grid = np.linspace(0.0, 1.0, points + 1)
    return float(integrate.trapezoid((f_direct(grid, ev) - ev.mean) ** 2, grid))
