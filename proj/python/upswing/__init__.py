"""Swing-up control learning: actor-critic training on surrogate rewards with
SNES fine-tuning on trajectory-level objectives, plus the cartpole and
double-pendulum simulators and scoring used to evaluate the controllers."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401

__version__ = "1.0.0"
