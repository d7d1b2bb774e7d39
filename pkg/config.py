import os
from dotenv import load_dotenv

# Load environment variables from .env file if present
load_dotenv()

# Numerical tolerances
TOL_LIN = float(os.getenv('RANDSPEC_TOL_LIN', '1e-10'))
CLUSTER_TOL = float(os.getenv('RANDSPEC_CLUSTER_TOL', '1e-9'))
PIPELINE_TOL = float(os.getenv('RANDSPEC_PIPELINE_TOL', '1e-8'))
CONTRACTION_MARGIN = float(os.getenv('RANDSPEC_CONTRACTION_MARGIN', '1e-12'))
WEIGHT_TOL = float(os.getenv('RANDSPEC_WEIGHT_TOL', '1e-12'))

# Desk-scale limits
MAX_DIM = int(os.getenv('RANDSPEC_MAX_DIM', '512'))

# Subset sampling for measure validation
#   - every subset of the cells when there are at most SUBSET_EXHAUSTIVE_LIMIT
#   - otherwise SUBSET_SAMPLES seeded random subsets
SUBSET_EXHAUSTIVE_LIMIT = int(os.getenv('RANDSPEC_SUBSET_EXHAUSTIVE_LIMIT', '12'))
SUBSET_SAMPLES = int(os.getenv('RANDSPEC_SUBSET_SAMPLES', '200'))
PAIR_EXHAUSTIVE_LIMIT = int(os.getenv('RANDSPEC_PAIR_EXHAUSTIVE_LIMIT', '5'))

DEFAULT_SEED = int(os.getenv('RANDSPEC_SEED', '0'))
LOG_LEVEL = os.getenv('RANDSPEC_LOG_LEVEL', 'INFO')

for _name, _value in [
    ('RANDSPEC_TOL_LIN', TOL_LIN),
    ('RANDSPEC_CLUSTER_TOL', CLUSTER_TOL),
    ('RANDSPEC_PIPELINE_TOL', PIPELINE_TOL),
    ('RANDSPEC_CONTRACTION_MARGIN', CONTRACTION_MARGIN),
    ('RANDSPEC_WEIGHT_TOL', WEIGHT_TOL),
]:
    if not _value > 0:
        raise ValueError(f"❌ {_name} must be positive, got {_value}.")

if MAX_DIM < 1:
    raise ValueError(f"❌ RANDSPEC_MAX_DIM must be at least 1, got {MAX_DIM}.")
