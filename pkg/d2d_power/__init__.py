"""
This package implements distributed, game-theoretic power allocation for D2D
couples sharing the subcarriers of a multi-cell OFDMA network.

This `__init__.py` file exposes key components of the package for easier access:

By importing the package, the following modules are directly available:
    - [types, errors, utils, scenario, rate_model, subproblem_solver, game_engine,
       underlay, sounding, validation, config, campaign]

The command line entry point lives in `d2d_power.cli`.
"""

from d2d_power.types import *
from d2d_power.errors import *
from d2d_power.utils import *
from d2d_power.scenario import *
from d2d_power.rate_model import *
from d2d_power.subproblem_solver import *
from d2d_power.game_engine import *
from d2d_power.underlay import *
from d2d_power.sounding import *
from d2d_power.validation import *
from d2d_power.config import *
from d2d_power.campaign import *
