from .load_settings import AppConfigLoader
from .env_vars import EnvConfig

__all__ = ["AppConfigLoader", "EnvConfig"]
