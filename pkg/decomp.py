# decomp.py
# Date: 2026-10-19
# Version: 1.0.0

"""
p-biased Fourier decomposition of the progression counter.

With y_i = (x_i - p) / sqrt(pq) the counter splits into homogeneous parts

    kAP^l(y) = p^(k - l/2) q^(l/2) * sum_{a,d} sum_{|S| = l} prod_{i in S} y_{a+id}

and the unweighted inner sums, divided by sigma_l, have unit variance under
independent standard normal inputs.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from config import COMPONENT_CELLS
from core_count import validate_probability
from custom_exceptions import MultilinearityError, NumericalError, ParameterError

logger = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class BiasedVector:
    """Normalised coordinates y_i of one sample under bias p."""
    y: np.ndarray
    p: float

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def ellsum(self):
        """l = sum_i y_i."""
        return float(self.y.sum())

    def indicators(self):
        """Recovers x_i = y_i sqrt(pq) + p, checking each lands on {0, 1}."""
        x = self.y * math.sqrt(self.p * self.q) + self.p
        rounded = np.rint(x)
        if not np.allclose(x, rounded, atol=1e-9) or not np.isin(rounded, (0.0, 1.0)).all():
            raise ParameterError("Vector is not the biased transform of an indicator vector.")
        return rounded.astype(bool)

@dataclass(frozen=True)
class DegreeComponents:
    """kAP^0..kAP^k of one sample and the normalised components for l in {1, 3, ..., k}."""
    raw: tuple
    normalized: dict = field(default_factory=dict)

    @property
    def total(self):
        return math.fsum(self.raw)

    @property
    def tail(self):
        """Y = kAP^{>=3}."""
        return math.fsum(self.raw[3:])

@dataclass(frozen=True)
class SigmaTable:
    """Exact sigma_l (independent of p) with the p-dependent totals sigma and sigma_Y."""
    n: int
    k: int
    p: float
    sigma_squared: dict
    sigma_ell: dict
    sigma_total: float
    sigma_Y: float

    @property
    def q(self):
        return 1.0 - self.p

    def degree_variance(self, ell):
        """Var[kAP^l] under the p-biased measure: p^(2k-l) q^l sigma_l^2."""
        return self.p ** (2 * self.k - ell) * self.q ** ell * self.sigma_squared[ell]

    @classmethod
    def from_squares(cls, n, k, p, squares):
        """Assembles a table from exact sigma_l^2 integers and a bias p."""
        p = validate_probability(p)
        q = 1.0 - p
        squares = {int(ell): int(value) for ell, value in squares.items()}
        sigma_ell = {ell: math.sqrt(value) for ell, value in squares.items()}
        total = math.fsum(p ** (2 * k - ell) * q ** ell * squares[ell] for ell in range(1, k + 1))
        tail = math.fsum(p ** (2 * k - ell) * q ** ell * squares[ell] for ell in range(3, k + 1))
        return cls(n=n, k=k, p=p, sigma_squared=squares, sigma_ell=sigma_ell,
                   sigma_total=math.sqrt(total), sigma_Y=math.sqrt(tail))

    def to_dict(self):
        return {
            "n": self.n,
            "k": self.k,
            "p": self.p,
            "sigma": {str(ell): value for ell, value in sorted(self.sigma_ell.items())},
            "sigma_squared": {str(ell): value for ell, value in sorted(self.sigma_squared.items())},
            "sigma_total": self.sigma_total,
            "sigma_Y": self.sigma_Y,
        }

def normalized_degrees(k):
    """Degrees carried by the normalised vector; the l = 2 coordinate is absent."""
    return (1,) + tuple(range(3, k + 1))

def degree_coefficient(ell, k, p):
    """p^(k - l/2) q^(l/2)."""
    q = 1.0 - p
    return p ** (k - ell / 2.0) * q ** (ell / 2.0)

def biased_transform(sample, p):
    """
    Maps a subset to y_i = (x_i - p) / sqrt(pq).

    Args:
        sample (SubsetSample): The subset.
        p (float): Bias, 0 < p < 1.

    Returns:
        BiasedVector: Mean-zero, unit-variance coordinates.
    """
    p = validate_probability(p)
    scale = math.sqrt(p * (1.0 - p))
    return BiasedVector(y=(sample.bits.astype(np.float64) - p) / scale, p=p)

@lru_cache(maxsize=32)
def _progression_index(n, k):
    """idx[d-1, i, a] = (a + i d) mod n, shape (floor(n/2), k, n)."""
    d = np.arange(1, n // 2 + 1)[:, None, None]
    i = np.arange(k)[None, :, None]
    a = np.arange(n)[None, None, :]
    idx = (a + i * d) % n
    idx.setflags(write=False)
    return idx

def _elementary_symmetric(values, k):
    """e_0..e_k of the k entries along axis 1 of values (rows, k, ...)."""
    shape = (k + 1, values.shape[0]) + values.shape[2:]
    e = np.zeros(shape, dtype=np.float64)
    e[0] = 1.0
    for i in range(k):
        v = values[:, i]
        for j in range(i + 1, 0, -1):
            e[j] += e[j - 1] * v
    return e

def component_sums_batch(Y, params):
    """
    Unweighted degree sums sum_{a,d} e_l(y_a, y_{a+d}, ..., y_{a+(k-1)d}) for
    every row of Y and every l in 0..k.

    Args:
        Y (numpy.ndarray): (B, n) array of coordinates (biased or Gaussian).
        params (APParams): Modulus and progression length.

    Returns:
        numpy.ndarray: (B, k+1) sums; column l times degree_coefficient gives kAP^l.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n, k = params.n, params.k
    idx = _progression_index(n, k)
    cells_per_row = max(1, params.half * n * (2 * k + 1))
    rows = max(1, COMPONENT_CELLS // cells_per_row)
    out = np.empty((Y.shape[0], k + 1), dtype=np.float64)
    for start in range(0, Y.shape[0], rows):
        block = Y[start:start + rows]
        values = block[:, idx]                         # (b, D, k, n)
        values = np.moveaxis(values, 2, 1)             # (b, k, D, n)
        e = _elementary_symmetric(values, k)           # (k+1, b, D, n)
        out[start:start + rows] = e.sum(axis=(2, 3)).T
    return out

def component_direct(y, ell, params):
    """
    kAP^l(y) by direct summation over (a, d, S) with S a size-l subset of
    positions; the reference oracle for the faster paths.

    Raises:
        MultilinearityError: If gcd(n, (k-1)!) != 1.
        ParameterError: If l is outside 0..k.
    """
    params.require_multilinear()
    n, k = params.n, params.k
    if not 0 <= ell <= k:
        raise ParameterError(f"Degree must lie in 0..{k}, got {ell}.")
    coefficient = degree_coefficient(ell, k, y.p)
    if ell == 0:
        return coefficient * params.num_progressions
    total = 0.0
    for d in range(1, params.half + 1):
        shifted = [np.roll(y.y, -((i * d) % n)) for i in range(k)]
        for subset in combinations(range(k), ell):
            product = np.ones(n)
            for i in subset:
                product = product * shifted[i]
            total += float(product.sum())
    return coefficient * total

def degree_components(y, params, sigma=None):
    """
    All degree components of one sample through elementary symmetric sums.

    Args:
        y (BiasedVector): Biased coordinates of the sample.
        params (APParams): Modulus and progression length.
        sigma (SigmaTable, optional): Normalisation; computed exactly if omitted.

    Returns:
        DegreeComponents: raw kAP^l for l = 0..k and normalised components.
    """
    params.require_multilinear()
    k = params.k
    sums = component_sums_batch(y.y[None, :], params)[0]
    raw = tuple(degree_coefficient(ell, k, y.p) * sums[ell] for ell in range(k + 1))
    if sigma is None:
        sigma = sigma_table(params, y.p)
    normalized = {ell: sums[ell] / sigma.sigma_ell[ell] for ell in normalized_degrees(k)}
    return DegreeComponents(raw=raw, normalized=normalized)

def normalized_components_batch(Y, params, sigma):
    """
    Normalised components (l in {1, 3, ..., k}) and the tail Y / sigma_Y for
    every row of Y, using the bias stored in the sigma table for the tail weights.

    Returns:
        tuple: ((B, k-1) components, (B,) normalised tail).
    """
    k = params.k
    sums = component_sums_batch(Y, params)
    degrees = normalized_degrees(k)
    values = np.column_stack([sums[:, ell] / sigma.sigma_ell[ell] for ell in degrees])
    tail = np.zeros(sums.shape[0])
    for ell in range(3, k + 1):
        tail += degree_coefficient(ell, k, sigma.p) * sums[:, ell]
    return values, tail / sigma.sigma_Y

def closed_form_low_degrees(ellsum, n, k, p):
    """
    Exact kAP^1 and kAP^2 from l = sum_i y_i alone.

    kAP^2 uses sum_i y_i^2 = n + ((1-2p)/sqrt(pq)) l, which holds for
    biased indicator inputs only.

    Returns:
        tuple: (kAP^1, kAP^2).
    """
    if math.gcd(n, math.factorial(k - 1)) != 1:
        raise MultilinearityError(n, k)
    p = validate_probability(p)
    q = 1.0 - p
    kap1 = (k * (n - 1) / 2.0) * p ** (k - 0.5) * q ** 0.5 * ellsum
    kap2 = math.comb(k, 2) * (p ** (k - 1) * q / 2.0) * (
        ellsum ** 2 - n - ((1.0 - 2.0 * p) / math.sqrt(p * q)) * ellsum)
    return kap1, kap2

@lru_cache(maxsize=256)
def sigma_squared_exact(ell, n, k):
    """
    sigma_l^2 = sum_A r(A)^2 where r(A) counts tuples (a, d, S) whose index
    set {a + id : i in S} equals A. Index sets are canonicalised as sorted
    residue tuples and counted by hashing.
    """
    if math.gcd(n, math.factorial(k - 1)) != 1:
        raise MultilinearityError(n, k)
    if not 1 <= ell <= k:
        raise ParameterError(f"Degree must lie in 1..{k}, got {ell}.")
    idx = _progression_index(n, k)
    encodable = n ** ell < 2 ** 62
    chunks = []
    for subset in combinations(range(k), ell):
        positions = np.sort(idx[:, list(subset), :], axis=1)     # (D, l, n)
        positions = np.moveaxis(positions, 1, 2).reshape(-1, ell)
        if encodable:
            weights = n ** np.arange(ell, dtype=np.int64)
            chunks.append(positions.astype(np.int64) @ weights)
        else:
            chunks.append(positions)
    if encodable:
        _, counts = np.unique(np.concatenate(chunks), return_counts=True)
    else:
        _, counts = np.unique(np.concatenate(chunks, axis=0), axis=0, return_counts=True)
    return int(np.sum(counts.astype(np.int64) ** 2))

def sigma_exact(ell, params):
    """
    sigma_l, the normaliser giving the degree-l sum unit variance under
    independent standard normal inputs. Exact integer before the square root.
    """
    params.require_multilinear()
    return math.sqrt(sigma_squared_exact(ell, params.n, params.k))

def _check_brackets(params, squares):
    n, k = params.n, params.k
    ratio = math.sqrt(squares[1]) / n ** 1.5
    if not k / 4.0 <= ratio <= k:
        raise NumericalError(f"sigma_1 / n^1.5 = {ratio:.4f} is outside [{k / 4}, {k}].")
    for ell in range(2, k + 1):
        ratio = math.sqrt(squares[ell]) / n
        upper = math.sqrt(math.comb(k, ell) * k * (k - 1) / 2.0)
        if not 0.25 <= ratio <= upper:
            raise NumericalError(f"sigma_{ell} / n = {ratio:.4f} is outside [0.25, {upper:.3f}].")

def sigma_table(params, p):
    """
    Assembles sigma_1..sigma_k, sigma (the standard deviation of kAP) and
    sigma_Y (the standard deviation of kAP^{>=3}).

    Args:
        params (APParams): Modulus and progression length; gcd_ok required.
        p (float): Bias.

    Returns:
        SigmaTable: Exact normalisation constants for (n, k, p).
    """
    params.require_multilinear()
    squares = {ell: sigma_squared_exact(ell, params.n, params.k) for ell in range(1, params.k + 1)}
    _check_brackets(params, squares)
    table = SigmaTable.from_squares(params.n, params.k, p, squares)
    logger.debug(f"Sigma table for n={params.n}, k={params.k}, p={p}: "
                 f"sigma={table.sigma_total:.4f}, sigma_Y={table.sigma_Y:.4f}")
    return table

def gaussian_component_samples(params, sigma, num, rng):
    """
    Normalised components and tail under i.i.d. standard normal inputs z,
    the Gaussian reference for variance and orthogonality checks.
    """
    params.require_multilinear()
    z = rng.standard_normal((num, params.n))
    return normalized_components_batch(z, params, sigma)

def expectation(params, p):
    """mu = p^k n floor(n/2)."""
    return validate_probability(p) ** params.k * params.num_progressions
