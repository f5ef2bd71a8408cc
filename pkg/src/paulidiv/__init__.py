"""Divisibility classes, collision models and collision-schedule synthesis for qubit Pauli maps."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .core import *  # noqa: F401,F403
from .divisibility import *  # noqa: F401,F403
from .families import *  # noqa: F401,F403
from .collision import *  # noqa: F401,F403
from .synthesis import *  # noqa: F401,F403
from .props import *  # noqa: F401,F403
