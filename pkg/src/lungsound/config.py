"""Configuration management for lungsound."""

import copy
import os
from pathlib import Path
from typing import Any

import yaml

# Default paths
CONFIG_ENV_VAR = "LUNGSOUND_CONFIG"
DEFAULT_CONFIG_DIR = Path.home() / ".config" / "lungsound"
DEFAULT_CONFIG_FILE = DEFAULT_CONFIG_DIR / "config.yaml"

# Default configuration
DEFAULT_CONFIG = {
    "seed": 0,
    "audio": {
        "sample_rate_hz": 44100,
        "window_s": 5.0,
        "stride_s": 1.0,
        "normalize": True,
    },
    "ingest": {
        "keep_device": "Meditron",
        "drop_classes": ["Asthma", "LRTI", "Pneumonia"],
        "test_fraction": 0.19,
        "age_group_width_years": 10.0,
        "delimiter": None,
    },
    "train": {
        "batch_size": 32,
        "epochs": 100,
        "learning_rate": 1e-3,
        "optimizer": "adam",
        "lr_schedule": "constant",
        "lr_decay": 0.5,
        "lr_step_epochs": 30,
        "patience": 10,
        "validation_fraction": 0.1,
        "class_weights": False,
        "dtype": "float32",
    },
    "bench": {
        "warmup_runs": 5,
        "measured_runs": 30,
        "power_mw": None,
        "power_file": None,
        "label": "local CPU",
    },
}

# Classes kept by the default selection, in database order
RETAINED_CLASSES = ["URTI", "Healthy", "COPD", "Bronchiectasis", "Bronchiolitis"]

# Recording-equipment tokens used in the public database file names
DEVICE_ALIASES = {
    "AKGC417L": "Microphone",
    "LittC2SE": "LittmannClassic",
    "Litt3200": "Littmann3200",
    "Meditron": "Meditron",
}

N_AGE_GROUPS = 10


class Config:
    """Configuration manager for lungsound."""

    def __init__(self, config_path: Path | None = None):
        """Initialize configuration.

        Args:
            config_path: Optional path to config file. Defaults to $LUNGSOUND_CONFIG,
                then ~/.config/lungsound/config.yaml
        """
        env_path = os.environ.get(CONFIG_ENV_VAR)
        self.config_path = Path(config_path or env_path or DEFAULT_CONFIG_FILE)
        self._config: dict[str, Any] = {}
        self._load()

    def _load(self) -> None:
        """Load configuration from file or fall back to defaults."""
        if self.config_path.exists():
            with open(self.config_path) as f:
                self._config = yaml.safe_load(f) or {}
        else:
            self._config = {}

        # Merge with defaults
        self._config = self._merge_defaults(DEFAULT_CONFIG, self._config)

    def _merge_defaults(self, defaults: dict, config: dict) -> dict:
        """Recursively merge config with defaults."""
        result = copy.deepcopy(defaults)
        for key, value in config.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_defaults(result[key], value)
            else:
                result[key] = value
        return result

    def save(self) -> None:
        """Save configuration to file."""
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, "w") as f:
            yaml.safe_dump(self._config, f, default_flow_style=False, sort_keys=True)

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot-separated key.

        Args:
            key: Dot-separated key (e.g., "audio.window_s")
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        parts = key.split(".")
        value = self._config
        for part in parts:
            if isinstance(value, dict) and part in value:
                value = value[part]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by dot-separated key.

        Args:
            key: Dot-separated key
            value: Value to set
        """
        parts = key.split(".")
        config = self._config
        for part in parts[:-1]:
            if part not in config:
                config[part] = {}
            config = config[part]
        config[parts[-1]] = value

    def section(self, name: str) -> dict[str, Any]:
        """Return a copy of a top-level section."""
        return copy.deepcopy(self._config.get(name, {}))

    def override(self, key: str, value: Any) -> Any:
        """Return ``value`` unless it is None, else the configured value for ``key``."""
        return self.get(key) if value is None else value


# Global config instance
_config: Config | None = None


def get_config(config_path: Path | None = None) -> Config:
    """Get global configuration instance.

    Passing a path replaces the cached instance.
    """
    global _config
    if _config is None or config_path is not None:
        _config = Config(config_path)
    return _config


def reset_config() -> None:
    """Drop the cached configuration instance."""
    global _config
    _config = None
