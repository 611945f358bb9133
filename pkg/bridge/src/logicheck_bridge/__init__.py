"""Neural worker for the logicheck wire protocol."""

from .serve import serve
from .session import WorkerSession

__version__ = "0.1.0"
