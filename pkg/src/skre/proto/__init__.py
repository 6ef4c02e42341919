from .base import Abort, ProtocolViolation
from .runner import PROTOCOLS, CrashedClient, RunResult, build_parties, effective_config, run_protocol

__all__ = [
    "Abort",
    "ProtocolViolation",
    "PROTOCOLS",
    "CrashedClient",
    "RunResult",
    "build_parties",
    "effective_config",
    "run_protocol",
]
