import os
from dotenv import load_dotenv
from pathlib import Path

# Load environment variables from .env file
load_dotenv()

# Project paths
BASE_DIR = Path(__file__).resolve().parent
FIXTURES_DIR = Path(os.getenv('FIXTURES_DIR', BASE_DIR / "fixtures"))
OUTPUT_DIR = Path(os.getenv('OUTPUT_DIR', BASE_DIR / "output"))

# Logging
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE')  # Unset means log to stderr only

# Differential Evolution defaults (F, Cr and the dither range are not published values)
DE_POPULATION_SIZE = int(os.getenv('DE_POPULATION_SIZE', '100'))
DE_MAX_GENERATIONS = int(os.getenv('DE_MAX_GENERATIONS', '10000'))
DE_CR = float(os.getenv('DE_CR', '0.9'))
DE_F_LO = float(os.getenv('DE_F_LO', '0.5'))
DE_F_HI = float(os.getenv('DE_F_HI', '1.0'))
DE_SEED = int(os.getenv('DE_SEED', '1'))
DE_WORKERS = int(os.getenv('DE_WORKERS', '1'))  # Process pool size for multi-seed runs

# Numerical tolerances
PARALLEL_TOLERANCE = float(os.getenv('PARALLEL_TOLERANCE', '1e-9'))  # On 1 - |a.b|
BRANCH_CLOSURE_TOLERANCE = float(os.getenv('BRANCH_CLOSURE_TOLERANCE', '1e-6'))
DISCRIMINANT_TOLERANCE = float(os.getenv('DISCRIMINANT_TOLERANCE', '1e-12'))
SINGULAR_TOLERANCE = float(os.getenv('SINGULAR_TOLERANCE', '1e-12'))
TARGET_NORM_TOLERANCE = float(os.getenv('TARGET_NORM_TOLERANCE', '1e-3'))

# Numeric output-angle oracle
ROOT_MAX_ITERATIONS = int(os.getenv('ROOT_MAX_ITERATIONS', '64'))
ROOT_XTOL = float(os.getenv('ROOT_XTOL', '1e-14'))

# Objective
INFEASIBLE_PENALTY = float(os.getenv('INFEASIBLE_PENALTY', '1e10'))
