"""Joint object category, instance and continuous pose estimation on view manifolds."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
