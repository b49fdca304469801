# app/boot/env_vars.py

import logging
import os
from typing import Optional

from dotenv import load_dotenv

_log = logging.getLogger(__name__)


class EnvConfig:
    """
    Environment variable accessor.

    - Loads a .env file once (best-effort).
    - Exposes the optional overrides `settings_path` (OVERLAPMESH_SETTINGS)
      and `out_dir` (OVERLAPMESH_OUT). Absent variables are None.
    """

    _dotenv_loaded = False

    def __init__(self) -> None:
        if not EnvConfig._dotenv_loaded:
            load_dotenv()
            EnvConfig._dotenv_loaded = True
        self.settings_path: Optional[str] = os.getenv("OVERLAPMESH_SETTINGS") or None
        self.out_dir: Optional[str] = os.getenv("OVERLAPMESH_OUT") or None
        if self.settings_path:
            _log.info("OVERLAPMESH_SETTINGS points to %s", self.settings_path)
