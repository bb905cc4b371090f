"""Method-bias removal for locally affine restoration estimators."""

from ._core import *  # noqa: F401,F403
from ._core import DebiasError  # noqa: F401

__version__ = "0.1.0"
