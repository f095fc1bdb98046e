"""Model sidecar speaking the claim-anchor newline-delimited JSON protocol."""

__version__ = "0.1.0"

from .config import SidecarConfig
from .embeddings import dump_embeddings
from .server import serve
