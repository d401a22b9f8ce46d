"""
Semi-supervised community detection on stochastic block model graphs.
"""

from pathlib import Path

from sbmssl._errors import *  # noqa: F403
from sbmssl._types import *  # noqa: F403
from sbmssl._graph import *  # noqa: F403
from sbmssl._oracle import *  # noqa: F403
from sbmssl._linalg import *  # noqa: F403
from sbmssl._ssl import *  # noqa: F403
from sbmssl._map_exact import *  # noqa: F403
from sbmssl._meanfield import *  # noqa: F403
from sbmssl._baselines import *  # noqa: F403
from sbmssl._harness import *  # noqa: F403


def _get_version():
    version_path = Path(__file__).resolve().parent / "version.txt"
    with open(version_path) as file:
        return file.readline()


__version__ = _get_version()
