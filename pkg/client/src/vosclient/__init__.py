"""Participant client for the interactive video-segmentation service."""

from .rle import RleError, decode, encode
from .session import (
    ClientError,
    ClientSession,
    FinalReply,
    RoundReply,
    Scribble,
    ServiceError,
    SessionClosed,
    SubmissionRejected,
    connect,
    submit,
)

__version__ = "0.1.0"

__all__ = [
    "ClientError",
    "ClientSession",
    "FinalReply",
    "RleError",
    "RoundReply",
    "Scribble",
    "ServiceError",
    "SessionClosed",
    "SubmissionRejected",
    "connect",
    "decode",
    "encode",
    "submit",
]
