"""Adiabatic eigenpath traversal: path construction, spectral analysis,
time evolution and adversary bounds for ordered search."""

from .numerics import *  # noqa: F401,F403
from .circuits import *  # noqa: F401,F403
from .paths import *  # noqa: F401,F403
from .analysis import *  # noqa: F401,F403
from .evolution import *  # noqa: F401,F403
from .adversary import *  # noqa: F401,F403
from .queries import *  # noqa: F401,F403
from . import adversary, analysis, circuits, evolution, numerics, paths, queries

__version__ = "0.1.0"

__all__ = (
    numerics.__all__
    + circuits.__all__
    + paths.__all__
    + analysis.__all__
    + evolution.__all__
    + adversary.__all__
    + queries.__all__
)
