"""Private BFT key-value store: replica and client state machines."""
from .client import Client, DealerMisbehaviour, Operation
from .costs import CostModel
from .messages import Envelope, Request, check, encode, seal
from .node import Node, Note, Send
from .replica import Replica, ReplicaConfig, compute_new_view_log, leader_of
from .signing import KeyRing, Signer
from .store import AclEntry, ClientEntry, PublicEntry, store_digest

__all__ = [
    "AclEntry",
    "Client",
    "ClientEntry",
    "CostModel",
    "DealerMisbehaviour",
    "Envelope",
    "KeyRing",
    "Node",
    "Note",
    "Operation",
    "PublicEntry",
    "Replica",
    "ReplicaConfig",
    "Request",
    "Send",
    "Signer",
    "check",
    "compute_new_view_log",
    "encode",
    "leader_of",
    "seal",
    "store_digest",
]
