"""Adaptive finite elements for constrained nonlinear eigenvalue problems."""

from ._afem import *  # noqa: F401,F403
from ._afem import __version__  # noqa: F401
