"""Python bindings for the bedsense pressure-mat pipeline."""

from bedsense._core import *  # noqa: F401,F403
from bedsense._core import DomainError, LoadError, FEATURE_NAMES  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
