"""User preferences for safe-admittance."""

import json
import os
from pathlib import Path

CONFIG_DIR = Path.home() / ".safe-admittance"
CONFIG_FILE = CONFIG_DIR / "config.json"
OUT_DIR_ENV = "SAFE_ADMITTANCE_OUT_DIR"

DEFAULT_CONFIG = {
    "out_dir": "runs",
    "jobs": 1,
    "channel": "1",
}


def load_config() -> dict:
    """Load preferences, merging with defaults.

    The output directory can be overridden by the SAFE_ADMITTANCE_OUT_DIR
    environment variable.

    Returns:
        Configuration dictionary
    """
    config = DEFAULT_CONFIG.copy()
    if CONFIG_FILE.exists():
        try:
            with open(CONFIG_FILE) as f:
                config.update(json.load(f))
        except (json.JSONDecodeError, OSError):
            pass
    if env_out := os.environ.get(OUT_DIR_ENV):
        config["out_dir"] = env_out
    return config


def save_config(config: dict) -> None:
    """Persist preferences.

    Args:
        config: Configuration dictionary to save
    """
    CONFIG_DIR.mkdir(parents=True, exist_ok=True)
    with open(CONFIG_FILE, "w") as f:
        json.dump(config, f, indent=2)
