"""Wire-protocol predictor server.

Bridges a pretrained masked or causal language model (or a
deterministic stub) onto the newline-delimited JSON protocol that the
text-regeneration pipeline's remote predictors speak, over stdio or a
TCP socket.
"""

from .config import AdapterConfig
from .models import StubModel, load_model
from .server import serve

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "StubModel", "load_model", "serve"]
