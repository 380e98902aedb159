# config.py
# Date: 2026-10-19
# Version: 1.0.0

"""Configuration file for the KAP LCLT Lab."""

import os
from pathlib import Path

# Base directories
BASE_DIR = Path(__file__).parent
OUTPUT_DIR = Path(os.environ.get("KAP_LAB_OUTPUT_DIR", BASE_DIR / "output"))
LOGS_DIR = BASE_DIR / "logs"
CACHE_DIR = Path(os.environ.get("KAP_LAB_CACHE_DIR", BASE_DIR / ".cache"))
LOG_FILE = LOGS_DIR / "kap_lab.log"

# Defaults mirror the flagship histogram: Z/101Z, 3APs, p = 1/2, 10^6 samples
DEFAULT_N = 101
DEFAULT_K = 3
DEFAULT_P = 0.5
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 20210101
DEFAULT_SHARDS = 1

# Monte Carlo engine
BLOCK_SIZE = 8192             # samples per RNG substream; fixed so shard count never matters
COMPONENT_CELLS = 6_000_000    # float cells per vectorised decomposition chunk
MC_BUDGET = 2.0e11            # num_samples * n^2 ceiling for counting runs
COMPONENT_BUDGET = 5.0e10     # num_samples * n^2 * 2^k ceiling when components are recorded
DEFAULT_COMPONENT_SAMPLES = 20_000

# Exact-convolution guard: nearest-integer distance allowed after an FFT
CONVOLUTION_ROUNDING_MARGIN = 0.25

# Lattice defaults (desk scale; deliberately below the asymptotic exponents)
DEFAULT_S = 3
DEFAULT_B_FRACTION = 1.0 / 8.0   # B = G / 8
ETA_CONSTANT = 2.0               # eta = ceil(2 (ln n)^(k/2))
PMF_TRUNCATION_SDS = 10.0        # |t| <= 10 sqrt(npq) in predicted_pmf

# Theta evaluator
THETA_EPS = 1e-14
THETA_GRID_POINTS = 4096
THETA_FLAT_AMPLITUDE = 1e-3      # exp(-pi^2 delta) above this: search extrema on log f, else on the cosine series
PARSEVAL_TOLERANCE = 1e-10

# LCLT scan phase bins (fractions of one lattice period)
PEAK_PHASE_EDGE = 0.15           # peak: [0, 0.15] U [0.85, 1)
TROUGH_PHASE_EDGES = (0.35, 0.65)

# Pilot-calibrated acceptance thresholds (the theory only gives Omega / o(1))
SCAN_DEVIATION_THRESHOLD = 0.05
KS_THRESHOLD = 0.05
POOLED_RATIO_THRESHOLD = 2.0
POOLED_PVALUE_THRESHOLD = 1e-6
L_ALPHA_CORRELATION_THRESHOLD = 0.8
TV_THRESHOLD = 0.15

# Create necessary directories
def ensure_directories():
    """Create all necessary directories if they don't exist."""
    for directory in [OUTPUT_DIR, LOGS_DIR, CACHE_DIR]:
        directory.mkdir(parents=True, exist_ok=True)
