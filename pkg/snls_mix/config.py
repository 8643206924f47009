"""
Configuration module for snls-mix
Centralizes environment variables and numerical defaults
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Project root (one level up from this package)
PROJECT_ROOT = Path(__file__).parent.parent

# Load environment variables from .env file in project root
load_dotenv(PROJECT_ROOT / ".env")

# Output settings
OUTPUT_DIR = Path(os.getenv("SNLS_MIX_OUT", str(PROJECT_ROOT / "runs")))
DEFAULT_THREADS = int(os.getenv("SNLS_MIX_THREADS", "1"))
LOG_LEVEL = os.getenv("SNLS_MIX_LOG_LEVEL", "INFO")

# Discretization defaults
DEFAULT_MODES = 128
DEFAULT_DT = 1e-3
LP_OVERSAMPLING = 4  # grid size >= 4M for Lebesgue norms

# Calibration defaults
DEFAULT_SAFETY = 2.0
DEFAULT_CORPUS_SIZE = 1000
CALIBRATION_MODES = 32
CORPUS_ACTIVE_MODES = 8
GAUSS_LEGENDRE_NODES = 8

# H^k is evaluated in log-space above this value
LOG_SPACE_THRESHOLD = 1e3

# Coupling defaults
MAX_COUPLING_ATTEMPTS = int(os.getenv("SNLS_MIX_MAX_COUPLING_ATTEMPTS", "1000"))
DEFAULT_FEEDBACK_GAIN = 5.0
DEFAULT_K0 = 50.0
LYAPUNOV_STRIDE = 10  # steps between Lyapunov accumulator updates inside a cycle

# Estimator defaults
MIN_SAMPLES_PER_BIN = 200
SIGMA_MARGIN = 3.0
MIN_TAIL_EXCEEDANCES = 10
MIN_FIT_POINTS = 8
