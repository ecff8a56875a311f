"""SiV color-centre simulation engine.
Re-export the entry points most scripts and tests need so `import sivsim` is enough.
"""
__version__ = '1.0.0'

from .acceptance import compare_acceptance  # noqa: E402
from .config import parse_scenario, parse_scenario_text  # noqa: E402
from .errors import ConfigError, PhysicsError, SivsimError  # noqa: E402
from .runner import reproduce, run  # noqa: E402

__all__ = [
    '__version__', 'compare_acceptance', 'parse_scenario', 'parse_scenario_text',
    'ConfigError', 'PhysicsError', 'SivsimError', 'reproduce', 'run',
]
