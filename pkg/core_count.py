# core_count.py
# Date: 2026-10-19
# Version: 1.0.0

"""
Sampling of p-biased subsets of Z/nZ and exact counting of k-term
arithmetic progressions.

A progression is a pair (a, d) with a in {0, ..., n-1} and
d in {1, ..., floor(n/2)}; it is counted when x_{a+id} = 1 for every
i in {0, ..., k-1}, indices taken mod n. d = 0 is never counted.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from config import CONVOLUTION_ROUNDING_MARGIN
from custom_exceptions import (
    MultilinearityError,
    NumericalError,
    ParameterError,
    ResidueIndexError,
    UnsupportedParametersError,
)

logger = logging.getLogger(__name__)

def validate_probability(p):
    """Raises ParameterError unless 0 < p < 1."""
    if not isinstance(p, (int, float, np.floating)) or not 0.0 < float(p) < 1.0:
        raise ParameterError(f"Bias p must lie strictly inside (0, 1), got {p!r}.")
    return float(p)

@dataclass(frozen=True)
class APParams:
    """Modulus n and progression length k, with the gcd(n, (k-1)!) = 1 flag."""
    n: int
    k: int
    gcd_ok: bool = field(init=False)

    def __post_init__(self):
        if int(self.k) != self.k or int(self.n) != self.n:
            raise ParameterError(f"n and k must be integers, got n={self.n!r}, k={self.k!r}.")
        if self.k < 3:
            raise ParameterError(f"Progression length k must be at least 3, got {self.k}.")
        if self.n < self.k:
            raise ParameterError(f"Modulus n must be at least k={self.k}, got {self.n}.")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "gcd_ok", math.gcd(self.n, math.factorial(self.k - 1)) == 1)

    @property
    def half(self):
        """floor(n/2), the largest common difference counted."""
        return self.n // 2

    @property
    def num_progressions(self):
        """n * floor(n/2): the count of the full set."""
        return self.n * self.half

    def require_multilinear(self):
        """Refuses parameters under which progressions may repeat a residue."""
        if not self.gcd_ok:
            raise MultilinearityError(self.n, self.k)

@dataclass(frozen=True, eq=False)
class SubsetSample:
    """One subset of Z/nZ as a read-only boolean vector plus its cached size."""
    bits: np.ndarray
    popcount: int = field(init=False)

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool).reshape(-1)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "popcount", int(np.count_nonzero(bits)))

    @property
    def n(self):
        return self.bits.size

    @classmethod
    def from_indices(cls, n, indices):
        bits = np.zeros(n, dtype=bool)
        bits[[int(i) % n for i in indices]] = True
        return cls(bits)

    @classmethod
    def full(cls, n):
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def empty(cls, n):
        return cls(np.zeros(n, dtype=bool))

    def toggled(self, t):
        """Returns a copy with membership of residue t flipped."""
        if not 0 <= t < self.n:
            raise ResidueIndexError(t, self.n)
        bits = self.bits.copy()
        bits[t] = not bits[t]
        return SubsetSample(bits)

    def as_int(self):
        """Packs the subset into a Python int, bit i <-> residue i."""
        packed = np.packbits(self.bits, bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    def __eq__(self, other):
        return isinstance(other, SubsetSample) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

def _check_length(sample, params):
    if sample.n != params.n:
        raise ParameterError(f"Sample has {sample.n} residues but n={params.n}.")

def sample_subset(params, p, stream):
    """
    Draws a p-biased subset: each residue is included independently with
    probability p.

    Args:
        params (APParams): Modulus and progression length.
        p (float): Inclusion probability, 0 < p < 1.
        stream (numpy.random.Generator): Seeded stream (see rng_streams).

    Returns:
        SubsetSample: The drawn subset.

    Raises:
        ParameterError: If p is outside (0, 1).
    """
    p = validate_probability(p)
    return SubsetSample(stream.random(params.n) < p)

def sample_subsets(params, p, stream, size):
    """Draws `size` subsets at once as a (size, n) boolean array."""
    p = validate_probability(p)
    return stream.random((size, params.n)) < p

def progression_residues(params, a, d):
    """Residues a, a+d, ..., a+(k-1)d mod n."""
    return tuple((a + i * d) % params.n for i in range(params.k))

def _rotate(mask, shift, n, full):
    # bit a of the result is bit (a + shift) mod n of mask
    shift %= n
    return ((mask >> shift) | (mask << (n - shift))) & full

def count_kap_naive(sample, params):
    """
    Counts k-term progressions by word-level bit tests: for each d the
    subset is intersected with its rotations by d, 2d, ..., (k-1)d and the
    surviving starting points are counted.

    Args:
        sample (SubsetSample): The subset.
        params (APParams): Modulus and progression length.

    Returns:
        int: Number of counted (a, d) pairs.
    """
    _check_length(sample, params)
    n, k = params.n, params.k
    full = (1 << n) - 1
    mask = sample.as_int()
    total = 0
    for d in range(1, params.half + 1):
        acc = mask
        for i in range(1, k):
            acc &= _rotate(mask, i * d, n, full)
            if not acc:
                break
        total += acc.bit_count()
    return total

def _count_3ap_fft(bits):
    """(count - popcount) / 2 = T with T = sum_b 1_S(b) (1_S * 1_S)(2b), batched over rows."""
    n = bits.shape[1]
    x = bits.astype(np.float64)
    spectrum = np.fft.rfft(x, axis=1)
    autoconv = np.fft.irfft(spectrum * spectrum, n=n, axis=1)
    rounded = np.rint(autoconv)
    margin = float(np.abs(autoconv - rounded).max()) if autoconv.size else 0.0
    if margin >= CONVOLUTION_ROUNDING_MARGIN:
        raise NumericalError(f"FFT convolution rounding margin {margin:.3g} exceeds "
                             f"{CONVOLUTION_ROUNDING_MARGIN}; result would not be exact.")
    doubled = (2 * np.arange(n)) % n
    weights = rounded.astype(np.int64)[:, doubled]
    triples = (weights * bits.astype(np.int64)).sum(axis=1)
    popcounts = bits.sum(axis=1, dtype=np.int64)
    return (triples - popcounts) // 2

def count_3ap_convolution(sample, params):
    """
    Counts 3-term progressions through one cyclic autoconvolution.

    Every ordered pair (b-d, b+d) with d != 0 is seen twice (d and -d) and
    the pairs with d = 0 contribute |S|, so count = (T - |S|) / 2.

    Raises:
        UnsupportedParametersError: If k != 3 or n is even.
        NumericalError: If the floating transform cannot be rounded safely.
    """
    _check_length(sample, params)
    if params.k != 3 or params.n % 2 == 0:
        raise UnsupportedParametersError(
            f"Convolution counting needs k = 3 and odd n, got n={params.n}, k={params.k}.")
    return int(_count_3ap_fft(sample.bits[None, :])[0])

def count_kap_batch(bits, params):
    """
    Counts progressions for every row of a (B, n) boolean array.

    Uses the convolution kernel when k = 3 and n is odd, word rolls
    otherwise; each row matches count_kap_naive exactly.
    """
    bits = np.asarray(bits, dtype=bool)
    if bits.ndim == 1:
        bits = bits[None, :]
    if bits.shape[1] != params.n:
        raise ParameterError(f"Rows have {bits.shape[1]} residues but n={params.n}.")
    if params.k == 3 and params.n % 2 == 1:
        return _count_3ap_fft(bits)
    totals = np.zeros(bits.shape[0], dtype=np.int64)
    for d in range(1, params.half + 1):
        acc = bits.copy()
        for i in range(1, params.k):
            acc &= np.roll(bits, -((i * d) % params.n), axis=1)
        totals += acc.sum(axis=1, dtype=np.int64)
    return totals

def flip_delta(sample, t, params):
    """
    Change in the progression count when residue t is toggled.

    Enumerates the progressions through t (at most k per difference d)
    and counts those whose other entries all lie in the subset.

    Returns:
        int: count(S with t toggled) - count(S).

    Raises:
        ResidueIndexError: If t is not in {0, ..., n-1}.
    """
    _check_length(sample, params)
    n, k = params.n, params.k
    if not isinstance(t, (int, np.integer)) or not 0 <= t < n:
        raise ResidueIndexError(t, n)
    bits = sample.bits
    through = 0
    for d in range(1, params.half + 1):
        starts = {(t - i * d) % n for i in range(k)}
        for a in starts:
            others = [(a + i * d) % n for i in range(k)]
            if all(bits[r] for r in others if r != t):
                through += 1
    return -through if bits[t] else through
