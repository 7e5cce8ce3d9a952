import os
from dotenv import load_dotenv

# Load environment variables from .env
load_dotenv()

# Model-hub cache directory handed to every from_pretrained call (None = library default)
MODEL_CACHE_DIR = os.getenv('MODEL_CACHE_DIR')

# Root log level for CLI runs
LOG_LEVEL = os.getenv('ACD_LOG_LEVEL', 'INFO')

# Torch device for training and encoding
DEVICE = os.getenv('ACD_DEVICE', 'cpu')

# Published class distributions of the shared-task data.
# Keys are label names as written in the taxonomy; Not-Tamil has no dev/test rows.
CLASS_DISTRIBUTIONS = {
    "tamil": {
        "Hope-Speech": 0.0351,
        "Homophobia": 0.0146,
        "Misandry": 0.1934,
        "Counter-speech": 0.0662,
        "Misogyny": 0.0562,
        "Xenophobia": 0.0425,
        "Transphobic": 0.002,
        "None-of-the-above": 0.59,
    },
    "codemix": {
        "Hope-Speech": 0.0361,
        "Homophobia": 0.0291,
        "Misandry": 0.144,
        "Counter-speech": 0.0571,
        "Misogyny": 0.0342,
        "Xenophobia": 0.0497,
        "Transphobic": 0.0274,
        "None-of-the-above": 0.62,
    },
}

# Published split sizes (train, dev, test)
SPLIT_SIZES = {
    "tamil": {"train": 2240, "dev": 560, "test": 700},
    "codemix": {"train": 5948, "dev": 1488, "test": 1859},
}

# Short names for the pretrained encoders; the core only ever sees the resolved identifier
ENCODER_ALIASES = {
    "muril": "google/muril-base-cased",
    "xlm-r": "xlm-roberta-base",
    "m-bert": "bert-base-multilingual-cased",
    "indic-bert": "ai4bharat/indic-bert",
}

# Encoders whose default pipeline trains on raw text
RAW_TEXT_ENCODERS = {"muril", "google/muril-base-cased", "google/muril-large-cased"}

# Pipeline defaults
DEFAULT_MAX_VOCAB = 64000
DEFAULT_MAX_LEN = 64
DEFAULT_FOLDS = 5
DEFAULT_PATIENCE = 3
DEFAULT_SMOTE_K = 5
HASHING_ENCODER_ID = "hashing"


def resolve_encoder_id(identifier: str) -> str:
    """Map a short alias to its hub identifier; anything else passes through"""
    return ENCODER_ALIASES.get(identifier.lower(), identifier) if identifier else identifier
