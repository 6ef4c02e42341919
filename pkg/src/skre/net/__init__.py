from .codec import Codec, GarbledInput, count_objects
from .envelope import MAX_PAYLOAD, PROTOCOL_IDS, PROTOCOL_NAMES, SERVER, Envelope, EnvelopeError, FrameTooLarge
from .session import ClientKeys, ServerKeys, SessionSetup, setup_session, trusted_dealer
from .transport import (
    Deadlock,
    LoopbackNetwork,
    Router,
    TcpServer,
    Transcript,
    TransportError,
    parse_addr,
    recv_frame,
    run_tcp_client,
    send_frame,
)

__all__ = [
    "Codec", "GarbledInput", "count_objects", "MAX_PAYLOAD", "PROTOCOL_IDS", "PROTOCOL_NAMES",
    "SERVER", "Envelope", "EnvelopeError", "FrameTooLarge", "ClientKeys", "ServerKeys",
    "SessionSetup", "setup_session", "trusted_dealer", "Deadlock", "LoopbackNetwork", "Router",
    "TcpServer", "Transcript", "TransportError", "parse_addr", "recv_frame", "run_tcp_client",
    "send_frame",
]
