# lattice.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Lattice model of kAP^1 + kAP^2.

Both low-degree components are functions of l = sum_i y_i alone:
kAP^1 + kAP^2 = Q(l) = C0 + C1 l + C2 l^2. The popcount moves l in steps
of 1/sqrt(pq), so X = Q(l) - Q(a0) sits on the values A_t spaced by
roughly G = C1 / sqrt(pq), while Y = kAP^{>=3} smears each value over a
width sigma_Y of the same order.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from config import ETA_CONSTANT, PMF_TRUNCATION_SDS
from core_count import validate_probability
from custom_exceptions import MultilinearityError, NumericalError, ParameterError, RegimeError

logger = logging.getLogger(__name__)

def round_half_up(x):
    """Nearest integer, halves rounded up: [pn] in the lattice construction."""
    return math.floor(x + 0.5)

def default_eta(n, k):
    """eta = ceil(2 (ln n)^(k/2))."""
    return max(1, math.ceil(ETA_CONSTANT * math.log(n) ** (k / 2.0)))

def lattice_coefficients(n, k, p):
    """(C0, C1, C2) of Q(l) = kAP^1 + kAP^2."""
    q = 1.0 - p
    c0 = -n * (k * (k - 1) / 4.0) * p ** (k - 1) * q
    c1 = ((k * (n - 1) / 2.0) * p ** (k - 0.5) * q ** 0.5
          - ((1.0 - 2.0 * p) * k * (k - 1) / 4.0) * p ** (k - 1.5) * q ** 0.5)
    c2 = (k * (k - 1) / 4.0) * p ** (k - 1) * q
    return c0, c1, c2

def delta_param(n, k, p, sigma):
    """
    Width parameter of the theta profile: delta = 2 p q sigma_Y^2 / C1^2.

    Args:
        n, k, p: Model inputs.
        sigma (SigmaTable): Provides sigma_Y.

    Returns:
        float: delta, bounded as n grows (tends to 1/9 for k = 3, p = 1/2).
    """
    p = validate_probability(p)
    q = 1.0 - p
    _, c1, _ = lattice_coefficients(n, k, p)
    if sigma.sigma_Y <= 0 or c1 <= 0:
        raise ParameterError(f"delta needs sigma_Y > 0 and C1 > 0 (got {sigma.sigma_Y}, {c1}).")
    return 2.0 * p * q * sigma.sigma_Y ** 2 / c1 ** 2

@dataclass(frozen=True)
class LatticeModel:
    """Immutable constants of the lattice construction for one (n, k, p)."""
    n: int
    k: int
    p: float
    q: float
    a0: float
    x0: float
    C0: float
    C1: float
    C2: float
    G: float
    mu: float
    delta: float
    sigma_Y: float
    sigma_total: float
    eta: int
    popcount_mode: int

    @property
    def root_pq(self):
        return math.sqrt(self.p * self.q)

    def Q(self, ell):
        """Q(l) = C0 + C1 l + C2 l^2."""
        return self.C0 + self.C1 * ell + self.C2 * ell ** 2

    def to_dict(self):
        return asdict(self)

def build_lattice_model(n, k, p, sigma, eta=None):
    """
    Builds the lattice constants from the exact low-degree formulae.

    Args:
        n (int): Modulus, gcd(n, (k-1)!) = 1.
        k (int): Progression length.
        p (float): Bias.
        sigma (SigmaTable): Exact normalisation table for (n, k, p).
        eta (int, optional): Index radius for the Y families; defaults to default_eta.

    Returns:
        LatticeModel: The constants a0, x0, C0, C1, C2, G, mu, delta, sigma_Y.
    """
    if math.gcd(n, math.factorial(k - 1)) != 1:
        raise MultilinearityError(n, k)
    p = validate_probability(p)
    if (sigma.n, sigma.k) != (n, k) or abs(sigma.p - p) > 1e-15:
        raise ParameterError(f"Sigma table is for (n={sigma.n}, k={sigma.k}, p={sigma.p}), "
                             f"not (n={n}, k={k}, p={p}).")
    q = 1.0 - p
    c0, c1, c2 = lattice_coefficients(n, k, p)
    if c1 <= 0:
        raise NumericalError(f"C1 = {c1} is not positive for n={n}, k={k}, p={p}.")
    mode = round_half_up(p * n)
    a0 = (mode - p * n) / math.sqrt(p * q)
    x0 = c0 + c1 * a0 + c2 * a0 ** 2
    model = LatticeModel(
        n=n, k=k, p=p, q=q, a0=a0, x0=x0, C0=c0, C1=c1, C2=c2,
        G=c1 / math.sqrt(p * q),
        mu=p ** k * n * (n // 2),
        delta=delta_param(n, k, p, sigma),
        sigma_Y=sigma.sigma_Y,
        sigma_total=sigma.sigma_total,
        eta=default_eta(n, k) if eta is None else int(eta),
        popcount_mode=mode,
    )
    logger.debug(f"Lattice model n={n}, k={k}, p={p}: G={model.G:.4f}, a0={a0:.4f}, "
                 f"x0={x0:.4f}, delta={model.delta:.6f}")
    return model

def a_t(model, t):
    """
    A_t = Q(a0 + t/sqrt(pq)) - Q(a0) = C2 (2 t a0 / sqrt(pq) + t^2 / pq) + C1 t / sqrt(pq),
    the value of X when the popcount is [pn] + t. Accepts arrays.
    """
    t = np.asarray(t, dtype=np.float64)
    r = model.root_pq
    values = model.C2 * (2.0 * t * model.a0 / r + t ** 2 / r ** 2) + model.C1 * t / r
    return float(values) if values.ndim == 0 else values

def monotone_radius(model):
    """
    Largest R with A_{-R} < ... < A_R and [pn] + t inside [0, n]. Outside it
    the ordering of the A_t (and hence the sandwich inclusions) breaks down.
    """
    limit = min(model.popcount_mode, model.n - model.popcount_mode)
    t = np.arange(-limit, limit + 1)
    # rising[j]: A_{t_j + 1} > A_{t_j}; equal neighbours count as a break
    rising = np.diff(a_t(model, t)) > 1e-9 * model.G
    radius = 0
    while radius < limit and rising[limit - radius - 1] and rising[limit + radius]:
        radius += 1
    return radius

@dataclass(frozen=True)
class IntervalFamily:
    """L_alpha(B, s): the 2s+1 intervals [G(i+alpha) - B, G(i+alpha) + B], |i| <= s."""
    alpha: float
    B: float
    s: int
    eta: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}.")
        if not self.B > 0:
            raise ParameterError(f"Half-width B must be positive, got {self.B}.")
        if int(self.s) != self.s or self.s < 1:
            raise ParameterError(f"s must be a positive integer, got {self.s}.")
        if int(self.eta) != self.eta or self.eta < 1:
            raise ParameterError(f"eta must be a positive integer, got {self.eta}.")

    def disjoint(self, model):
        """The intervals are pairwise disjoint when B < G/2."""
        return self.B < model.G / 2.0

def _in_union(G, alpha, B, lo, hi, v):
    """v in the union over integer lo <= i <= hi of [G(i+alpha) - B, G(i+alpha) + B]."""
    v = np.asarray(v, dtype=np.float64)
    nearest = np.clip(np.rint(v / G - alpha), lo, hi)
    inside = np.abs(v - G * (nearest + alpha)) <= B
    return bool(inside) if inside.ndim == 0 else inside

def in_L_alpha(model, fam, v):
    """
    Membership of v in L_alpha(B, s) in O(1): only the centre nearest to v
    (clamped to |i| <= s) can contain it.
    """
    return _in_union(model.G, fam.alpha, fam.B, -fam.s, fam.s, v)

@dataclass(frozen=True)
class LProbabilityPrediction:
    value: float
    in_regime: bool

def predicted_L_probability(model, fam, f_delta):
    """
    Leading-order P[X + Y in L_alpha(B, s)] = (2 s B sqrt(2) / (sigma_Y sqrt(pi n p q))) f_delta(alpha).

    Outside B < n^(1-1/36), eta < s < n^(1/2-1/24) the value is still
    returned but tagged as extrapolated.

    Args:
        model (LatticeModel): Lattice constants.
        fam (IntervalFamily): alpha, B, s, eta.
        f_delta (ThetaEvaluator): Theta profile, normally built with model.delta.

    Returns:
        LProbabilityPrediction: value and in_regime flag.
    """
    if fam.B <= 0 or fam.s <= 0:
        raise ParameterError("B and s must be positive.")
    if abs(f_delta.delta - model.delta) > 1e-12:
        logger.warning(f"Theta evaluator delta={f_delta.delta} differs from model delta={model.delta}.")
    n = model.n
    in_regime = fam.B < n ** (1.0 - 1.0 / 36.0) and fam.eta < fam.s < n ** (0.5 - 1.0 / 24.0)
    scale = 2.0 * fam.s * fam.B * math.sqrt(2.0) / (model.sigma_Y * math.sqrt(math.pi * n * model.p * model.q))
    value = scale * f_delta(fam.alpha)
    if not in_regime:
        logger.debug(f"L_alpha prediction at alpha={fam.alpha} is extrapolated (B={fam.B}, s={fam.s}).")
    return LProbabilityPrediction(value=float(value), in_regime=in_regime)

@dataclass(frozen=True)
class SandwichResult:
    lhs: bool
    rhs_lower: bool
    rhs_upper: bool
    y_bounded: bool
    lower_in_regime: bool
    upper_in_regime: bool

    @property
    def lower_holds(self):
        """rhs_lower implies lhs (vacuous when the lower side is out of regime)."""
        return not self.lower_in_regime or not self.rhs_lower or self.lhs

    @property
    def upper_holds(self):
        """lhs with |Y| <= eta G implies rhs_upper (vacuous out of regime)."""
        return not self.upper_in_regime or not (self.lhs and self.y_bounded) or self.rhs_upper

def sandwich_regime(model, fam):
    """(lower_ok, upper_ok): whether each inclusion is claimed for these parameters."""
    pq = model.p * model.q
    s, eta, B = fam.s, fam.eta, fam.B
    radius = monotone_radius(model)
    lower_ok = s > eta and B - model.C2 * (s ** 2 + s) / pq >= 0 and s <= radius
    upper_ok = (B < model.G / 2.0
                and model.C2 * (s + eta + 2) * (s + eta + 3) / pq < model.G / 2.0
                and s + eta + 2 <= radius)
    return lower_ok, upper_ok

def sandwich_check(model, fam, t, yval, require="both"):
    """
    Evaluates, for X = A_t and Y = yval, the event X + Y in L_alpha(B, s) and
    the two bracketing events:

      lower: |t| <= s - eta and Y in L_alpha(eta, B - C2 (s^2 + s)/pq)
      upper: |t| <= s + eta + 1 and Y within B + C2 (s+eta+1)(s+eta+2)/pq of
             some G(i + alpha) with |i + alpha| <= eta + (upper width) / G

    The upper width and index window are the ones the inclusion argument
    delivers when |Y| <= eta G; with alpha = 0 the window is |i| <= eta.

    Args:
        require (str): "both", "lower" or "upper" - the sides whose
            preconditions must hold.

    Raises:
        RegimeError: If a required side is out of regime or t lies outside
            the monotone radius.
    """
    if require not in ("both", "lower", "upper"):
        raise ParameterError(f"require must be 'both', 'lower' or 'upper', got {require!r}.")
    lower_ok, upper_ok = sandwich_regime(model, fam)
    if require in ("both", "lower") and not lower_ok:
        raise RegimeError(f"Lower inclusion is not claimed for s={fam.s}, eta={fam.eta}, B={fam.B}.")
    if require in ("both", "upper") and not upper_ok:
        raise RegimeError(f"Upper inclusion is not claimed for s={fam.s}, eta={fam.eta}, B={fam.B}.")
    if abs(t) > monotone_radius(model):
        raise RegimeError(f"t={t} lies outside the monotone radius {monotone_radius(model)}.")

    pq = model.p * model.q
    s, eta, alpha, G = fam.s, fam.eta, fam.alpha, model.G
    x = a_t(model, t)
    lhs = in_L_alpha(model, fam, x + yval)

    lower_width = fam.B - model.C2 * (s ** 2 + s) / pq
    rhs_lower = abs(t) <= s - eta and lower_width >= 0 and _in_union(G, alpha, lower_width, -eta, eta, yval)

    upper_width = fam.B + model.C2 * (s + eta + 1) * (s + eta + 2) / pq
    reach = eta + upper_width / G
    lo, hi = math.ceil(-reach - alpha), math.floor(reach - alpha)
    rhs_upper = abs(t) <= s + eta + 1 and _in_union(G, alpha, upper_width, lo, hi, yval)

    return SandwichResult(
        lhs=bool(lhs), rhs_lower=bool(rhs_lower), rhs_upper=bool(rhs_upper),
        y_bounded=abs(yval) <= eta * G,
        lower_in_regime=lower_ok, upper_in_regime=upper_ok,
    )

def popcount_distribution(model):
    """Binomial(n, p) law of the subset size."""
    return stats.binom(model.n, model.p)

def predicted_pmf(model, binom, x):
    """
    Discrete-Gaussian convolution model of P[kAP = x]:

        sum_t P[popcount = [pn] + t] phi(x - mu - x0 - A_t; 0, sigma_Y),

    with |t| <= 10 sqrt(npq). A heuristic shape, not a theorem.

    Args:
        model (LatticeModel): Lattice constants.
        binom: Frozen binomial distribution (or any object with .pmf) of the popcount.
        x (int or numpy.ndarray): Integer value(s).

    Returns:
        float or numpy.ndarray: Model probability at x.
    """
    x = np.asarray(x, dtype=np.float64)
    radius = math.ceil(PMF_TRUNCATION_SDS * math.sqrt(model.n * model.p * model.q))
    t = np.arange(-radius, radius + 1)
    sizes = model.popcount_mode + t
    keep = (sizes >= 0) & (sizes <= model.n)
    t, sizes = t[keep], sizes[keep]
    weights = np.asarray(binom.pmf(sizes), dtype=np.float64)
    centres = model.mu + model.x0 + a_t(model, t)
    density = stats.norm.pdf(x[..., None], loc=centres, scale=model.sigma_Y)
    values = density @ weights
    return float(values) if values.ndim == 0 else values

def gaussian_l_alpha_oracle(model, fam, linearize=False):
    """
    P[X + Y in L_alpha(B, s)] with the popcount coordinate Gaussian on its
    integer lattice and Y ~ N(0, sigma_Y^2) independent, each interval
    integrated exactly through the normal CDF.

    With linearize=True the lattice values A_t are replaced by tG, which
    isolates the alpha-profile that delta describes.
    """
    npq = model.n * model.p * model.q
    radius = math.ceil(PMF_TRUNCATION_SDS * math.sqrt(npq))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    offsets = (model.popcount_mode + t - model.p * model.n) / math.sqrt(npq)
    weights = stats.norm.pdf(offsets) / math.sqrt(npq)
    shifts = t * model.G if linearize else a_t(model, t)
    centres = model.G * (np.arange(-fam.s, fam.s + 1) + fam.alpha)
    upper = (centres[None, :] + fam.B - shifts[:, None]) / model.sigma_Y
    lower = (centres[None, :] - fam.B - shifts[:, None]) / model.sigma_Y
    mass = (stats.norm.cdf(upper) - stats.norm.cdf(lower)).sum(axis=1)
    return float(weights @ mass)

def sandwich_trials(model, fam, num, rng, require="both"):
    """
    Randomised check of the sandwich inclusions on `num` (t, Y) pairs.

    Half of the Y values are uniform on [-(eta+1)G, (eta+1)G]; the other
    half sit within the upper width of a lattice point so both events fire often.

    Returns:
        dict: trials, lhs_hits, lower_violations, upper_violations.
    """
    lower_ok, upper_ok = sandwich_regime(model, fam)
    radius = min(monotone_radius(model), fam.s + fam.eta + 3)
    pq = model.p * model.q
    spread = fam.B + model.C2 * (fam.s + fam.eta + 1) * (fam.s + fam.eta + 2) / pq
    ts = rng.integers(-radius, radius + 1, size=num)
    uniform = rng.uniform(-(fam.eta + 1) * model.G, (fam.eta + 1) * model.G, size=num)
    near = (model.G * (rng.integers(-fam.eta - 1, fam.eta + 2, size=num) + fam.alpha)
            + rng.uniform(-spread, spread, size=num))
    ys = np.where(rng.random(num) < 0.5, uniform, near)
    tally = {"trials": int(num), "lhs_hits": 0, "lower_violations": 0, "upper_violations": 0}
    for t, y in zip(ts.tolist(), ys.tolist()):
        result = sandwich_check(model, fam, t, y, require=require)
        tally["lhs_hits"] += int(result.lhs)
        tally["lower_violations"] += int(lower_ok and not result.lower_holds)
        tally["upper_violations"] += int(upper_ok and not result.upper_holds)
    logger.info(f"Sandwich trials: {tally}")
    return tally
