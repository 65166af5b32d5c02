"""
Centralized version management for pk-design.

Import this module to get the current version:
    from src.__version__ import __version__

Or within the src package:
    from .__version__ import __version__
"""

__version__ = "1.0.0"
__version_info__ = tuple(int(x) for x in __version__.split("."))
