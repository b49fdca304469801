# app/boot/load_settings.py

import argparse
import logging
import os
from typing import Any, Dict, Optional

import yaml

from app.boot.env_vars import EnvConfig

_log = logging.getLogger(__name__)

SETTINGS_FILE = "overlapmesh-settings.yaml"


class AppConfigLoader:
    """
    Singleton-style settings loader.

    - Loads the base YAML from settings/overlapmesh-settings.yaml (or the
      path named by OVERLAPMESH_SETTINGS)
    - Exposes a copy via get_config()
    - Applies CLI arg overrides via merge_with_args()
    """
    _instance = None
    _config: Optional[Dict[str, Any]] = None

    def __new__(cls) -> "AppConfigLoader":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self) -> None:
        # Load once per process
        if self._config is None:
            _log.info("Initializing application settings.")
            self._load_from_yaml()

    @classmethod
    def reset(cls) -> None:
        """Forget the cached settings (tests switch settings files)."""
        cls._instance = None
        cls._config = None

    # ──────────────────────────────────────────────────────────────────────────
    # Internal loading
    # ──────────────────────────────────────────────────────────────────────────
    def _load_from_yaml(self) -> None:
        # project_root = repo root (two levels up from app/boot/)
        project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
        settings_path = EnvConfig().settings_path or os.path.join(project_root, "settings", SETTINGS_FILE)

        try:
            with open(settings_path, "r", encoding="utf-8") as fh:
                type(self)._config = yaml.safe_load(fh) or {}
                _log.info("Settings loaded from %s", settings_path)
        except FileNotFoundError:
            _log.warning("Settings file not found at %s. Using built-in defaults.", settings_path)
            type(self)._config = {}
        except yaml.YAMLError as exc:
            _log.error("Failed to parse settings: %s", exc, exc_info=True)
            type(self)._config = {}

    # ──────────────────────────────────────────────────────────────────────────
    # Public API
    # ──────────────────────────────────────────────────────────────────────────
    def get_config(self) -> Dict[str, Any]:
        """
        Return a copy of the loaded settings, one level deep.
        """
        return {k: dict(v) if isinstance(v, dict) else v for k, v in (self._config or {}).items()}

    def merge_with_args(self, args: argparse.Namespace) -> Dict[str, Any]:
        """
        Merge CLI flags into the loaded configuration.
        CLI always takes precedence over YAML; OVERLAPMESH_OUT sits in between.

        Returns a new merged dict (does not mutate the internal cache).
        """
        cfg = self.get_config()

        run_cfg = cfg.setdefault("run", {})
        env_out = EnvConfig().out_dir
        if env_out:
            run_cfg["out_dir"] = env_out
        for flag, key in (("n", "n_list"), ("gamma", "gamma"), ("out", "out_dir"), ("seed", "seed"), ("reps", "reps")):
            value = getattr(args, flag, None)
            if value is not None:
                run_cfg[key] = value
        if getattr(args, "phases", None) is not None:
            run_cfg["phases"] = args.phases

        # The elasticity demo runs one background resolution: the first N
        if getattr(args, "command", None) == "elasticity" and getattr(args, "n", None):
            cfg.setdefault("elasticity", {})["n"] = args.n[0]

        # Logging overrides
        log_cfg = cfg.setdefault("logging", {})
        # Verbose flag bumps level to DEBUG
        if getattr(args, "verbose", False) or getattr(args, "debug", False):
            log_cfg["level"] = "DEBUG"

        _log.debug("Settings merge complete: %s", cfg)
        return cfg
