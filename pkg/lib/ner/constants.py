"""
Span NER Constants

Central configuration constants for the span NER engine.
All hyperparameter defaults, numeric floors, and file-format magics in one place.

Author: SpanNER Team
Date: 2025-02-03
"""

# ============================================================================
# Label Constants
# ============================================================================

NON_ENTITY_LABEL = "O"  # Name of the non-entity label
BIO_BEGIN = "B"
BIO_INSIDE = "I"
BIO_OUTSIDE = "O"

# ============================================================================
# Training Hyperparameter Defaults
# ============================================================================

DEFAULT_LAMBDA = 0.1  # Weight of the contrastive term in the final loss
DEFAULT_ALPHA = 0.5  # Weight of the retrieval distribution at inference
DEFAULT_TAU = 0.1  # Contrastive temperature
DEFAULT_NEG_RATIO = 0.35  # Negative sampling ratio (negatives per token)
DEFAULT_DROPOUT = 0.4
DEFAULT_BATCH_SIZE = 16  # Sentences per optimizer step
DEFAULT_LEARNING_RATE = 1e-5
DEFAULT_EPOCHS = 30
DEFAULT_MAX_SPAN_LEN = 10  # Tokens
DEFAULT_SEED = 13
DEFAULT_MIN_TOKEN_COUNT = 1  # Rarer training tokens share the UNK row

# Adam
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# ============================================================================
# Model Dimension Defaults (desk scale)
# ============================================================================

DEFAULT_EMBED_DIM = 32  # d_e
DEFAULT_HIDDEN_DIM = 64  # d_h
DEFAULT_PROJECTION_DIM = 256  # d_r, dimension of the scoring layer W
INIT_SCALE = 0.1  # Parameters initialised uniform(-INIT_SCALE, INIT_SCALE)
WINDOW_RADIUS = 1
UNK_TOKEN = "<unk>"
UNK_INDEX = 0

# ============================================================================
# Numeric Constants
# ============================================================================

PROB_FLOOR = 1e-12  # Cross-entropy clamp for p(gold)
NORM_FLOOR = 1e-12  # Below this a vector counts as degenerate for cosine
NEG_SAMPLE_CEIL_SLACK = 1e-9  # Guards ceil(ratio * n) against float noise

# ============================================================================
# Gradient Check Constants
# ============================================================================

GRADCHECK_STEP = 1e-5  # Central finite-difference step
GRADCHECK_TOLERANCE = 1e-4  # Maximum relative error per parameter block
GRADCHECK_EMBED_DIM = 8
GRADCHECK_HIDDEN_DIM = 16
GRADCHECK_PROJECTION_DIM = 16
GRADCHECK_NUM_LABELS = 3
GRADCHECK_BATCH_INSTANCES = 6
GRADCHECK_INIT_SCALE = 0.5

# ============================================================================
# Binary Format Constants
# ============================================================================

CHECKPOINT_MAGIC = b"SPNRCKPT"
CENTROID_MAGIC = b"SPNRCTBL"
FEATURES_MAGIC = b"SPNRFEAT"
REPRESENTATION_MAGIC = b"SPNRREPS"
FORMAT_VERSION = 1

# ============================================================================
# Random Stream Labels
# ============================================================================

# Subsystem seeds are SeedSequence([seed, crc32(label), ...])
STREAM_INIT = "init"
STREAM_SHUFFLE = "shuffle"
STREAM_NEGATIVES = "negatives"
STREAM_DROPOUT = "dropout"
STREAM_CENTROIDS = "centroids"
STREAM_CORRUPTION = "corruption"
STREAM_SYNTHETIC = "synthetic"
STREAM_SYNTHETIC_DICTIONARY = "synthetic_dictionary"
STREAM_GRADCHECK = "gradcheck"

# ============================================================================
# Experiment Constants
# ============================================================================

VARIANT_CE_ONLY = "ce_only"
VARIANT_SCL_ONLY = "scl_only"
VARIANT_SCL_RAI = "scl_rai"
VARIANT_SCL_RAI_ALL_NEGATIVES = "scl_rai_all_negatives"
ALL_VARIANTS = (VARIANT_CE_ONLY, VARIANT_SCL_ONLY, VARIANT_SCL_RAI, VARIANT_SCL_RAI_ALL_NEGATIVES)

DEFAULT_CORRUPTION_RATE = 0.4
DEFAULT_SWEEP_SIZES = (8, 16, 32)

# ============================================================================
# Performance Monitoring Constants
# ============================================================================

PERF_MONITOR_WINDOW_SIZE = 1000  # Step timings kept for statistics

# ============================================================================
# Exit Codes
# ============================================================================

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-03"
__description__ = "Central constants for the span NER engine"
