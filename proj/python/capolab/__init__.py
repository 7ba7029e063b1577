"""Policy-optimization laboratory.

Thin Python interface over the C++ core: tabular softmax policies, exactly
analyzable environments (grouped bandit, sparse-reward chain), group-relative
advantage estimators, the two-phase advantage-gated curriculum objective, the
training/sweep/compare drivers, and the Monte Carlo gradient-estimator lab.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__, __version__  # noqa: F401
