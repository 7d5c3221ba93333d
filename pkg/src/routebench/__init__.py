"""Day-to-day urban routing benchmark on a point-queue traffic model."""

from .traffic import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
