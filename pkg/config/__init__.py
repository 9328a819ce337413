"""Config package for toporeuse."""

from .loader import ConfigLoader, load_config
from .schema import RunConfig

__all__ = ["ConfigLoader", "RunConfig", "load_config"]
