"""Speaker-profile generation and evaluation on a synthetic multi-speaker corpus."""

from voxprofile.backend import backend_name

__version__ = "0.1.0"
__all__ = ["backend_name", "__version__"]
