from .config import RunConfig
from .evaluate import AgentRunner, BtRunner, EvalReport, TrialRecord, compare, evaluate

__all__ = [
    "AgentRunner",
    "BtRunner",
    "EvalReport",
    "RunConfig",
    "TrialRecord",
    "compare",
    "evaluate",
]
