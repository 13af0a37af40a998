"""Constants used throughout tcn-bench.

This module centralizes the numbers that define the datasets, architectures
and training schedules. Keeping them together makes the relationships between
them visible, e.g. the encoder depth follows from the render size and the
feature map size.

Categories:
- Object Space: discrete level tiling of the four object dimensions
- VAEC Rendering: image geometry and colours
- Regimes: region and scale layout
- Dynamic Objects: sequence geometry and train/test size split
- Architecture: layer widths for both models
- Normalization: epsilon and the comparison-method parameters
- Training Schedules: iteration counts, learning rates, batch size
- Optimizer: ADAM defaults
- Exit Codes: CLI process status
"""

# === Object Space ===
NUM_LEVELS = 42  # Each dimension is a linear range tiled by 42 levels
MAX_LEVEL = NUM_LEVELS - 1
DIMENSIONS = ("brightness", "size", "x", "y")

BRIGHTNESS_MIN = 0.4
BRIGHTNESS_MAX = 1.0
WIDTH_MIN = 3  # width = 3 + 2 * level, so level 41 -> 85
WIDTH_STEP = 2
CENTER_MIN = 43  # center = 43 + level, so level 41 -> 84
CENTER_STEP = 1

# === VAEC Rendering ===
VAEC_IMAGE_SIZE = 128
VAEC_CHANNELS = 3
BACKGROUND_GRAY = 0.5

# === Regimes ===
NUM_REGIONS = 6
LEVELS_PER_REGION = 7
NUM_FOILS = 6
NUM_CANDIDATES = NUM_FOILS + 1
PROBLEMS_PER_REGION = 19040
REGIME_KINDS = ("translation", "scale")

# === Dynamic Objects ===
DYNOBJ_IMAGE_SIZE = 64
DYNOBJ_SEQUENCE_LENGTH = 20
DYNOBJ_LOCATION_RANGE = (16.0, 48.0)
DYNOBJ_TRAIN_SIZE_RANGE = (3.0, 13.0)
DYNOBJ_TEST_SIZE_RANGE = (13.0, 31.0)
DYNOBJ_SPLITS = ("train", "test")
MANIFEST_DECIMALS = 6

# === Architecture ===
FEATURE_MAP_SIZE = 8  # Encoders stop at an 8x8x32 feature map
CONV_CHANNELS = 32
CONV_KERNEL = 4
CONV_STRIDE = 2
CONV_PADDING = 1  # Halves the spatial size exactly with 4x4 stride-2 kernels
ANALOGY_HIDDEN = 256
ANALOGY_EMBEDDING = 256
ANALOGY_LSTM_HIDDEN = 256
AUTOENCODER_HIDDEN = 256
AUTOENCODER_EMBEDDING = 10
PREDICTOR_LSTM_HIDDEN = 20

# === Normalization ===
NORM_EPS = 1e-8
SUB_BATCH_SIZE = 4
MISALIGNED_SEGMENT_LENGTH = 5
SLIDING_WINDOW = 4  # itself plus the preceding 3 objects
DROPOUT_RATE = 0.5
TRAIN_STATS_SAMPLE_SEQUENCES = 500

# === Training Schedules ===
BATCH_SIZE = 32
ANALOGY_ITERATIONS = 10_000
ANALOGY_LEARNING_RATE = 5e-4
SLOW_CONVERGENCE_ITERATIONS = 500_000  # layer norm and no norm
NO_NORM_LEARNING_RATE = 1e-4
AUTOENCODER_ITERATIONS = 200_000
PREDICTOR_ITERATIONS = 20_000
DYNOBJ_LEARNING_RATE = 5e-4
LOSS_HALVING_WINDOW = 10

# === Optimizer ===
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# === Exit Codes ===
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INPUT_MISSING = 3
EXIT_NUMERICAL_ABORT = 4

# === Run Directory Layout ===
CONFIG_SNAPSHOT = "config.cfg"
DONE_MARKER = "DONE"
CHECKPOINT_NAME = "model.ckpt"
LOG_NAME = "train.log"
MISSING_MARKER = "NA"
AUTOENCODER_CHECKPOINT = "autoencoder.ckpt"
PREDICTOR_CHECKPOINT = "predictor.ckpt"
ABORT_SNAPSHOT = "abort.ckpt"
LOSS_LOG = "loss.csv"
AUTOENCODER_LOSS_LOG = "autoencoder_loss.csv"
PREDICTOR_LOSS_LOG = "predictor_loss.csv"
