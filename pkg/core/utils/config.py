"""
Configuration module for the application.
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

def get_env_variable(key, default=None):
    """Get an environment variable.

    Args:
        key: The name of the environment variable.
        default: The default value to return if the variable is not set.

    Returns:
        The value of the environment variable, or the default if not set.
    """
    return os.getenv(key, default)

# Binary feature files
FEATURE_MAGIC = b"I2MV"
FEATURE_VERSION = 1

# Checkpoints
CHECKPOINT_MAGIC = b"I2MVCKPT"
CHECKPOINT_VERSION = 1

# Main configuration dictionary
config = {
    # File naming inside an output directory
    "files": {
        "labels_suffix": ".labels",
        "feature_suffix": ".features",
        "embeddings": "embeddings.txt",
        "views": "views.json",
        "synth_spec": "synth_spec.json",
        "checkpoint": "best.ckpt",
        "train_log": "train_log.jsonl",
        "heldout": "heldout_seen.features",
        "log_file": get_env_variable('I2MV_LOG_FILE'),
    },

    # Numerics
    "numerics": {
        "grad_check_epsilon": 1e-5,
        "grad_check_tolerance": 1e-4,
        "grad_check_epsilon_range": (1e-7, 1e-3),
    },

    # Language model access
    "llm": {
        "temperature": 0.9,
        "max_tokens": 512,
        "retries": 3,
        "backoff_seconds": 1.0,
        "max_in_flight": 4,
    },
}

# Synthetic bundle file names used by the synth and train commands
SYNTH_FILES = {
    "EMBEDDINGS": config["files"]["embeddings"],
    "VIEWS": config["files"]["views"],
    "SPEC": config["files"]["synth_spec"],
    "TRAIN": "train" + config["files"]["feature_suffix"],
    "VAL": "val" + config["files"]["feature_suffix"],
    "TEST_SEEN": "test_seen" + config["files"]["feature_suffix"],
    "TEST_UNSEEN": "test_unseen" + config["files"]["feature_suffix"],
}
