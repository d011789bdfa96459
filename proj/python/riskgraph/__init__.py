from ._riskgraph import *  # noqa: F401,F403
