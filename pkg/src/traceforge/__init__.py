"""traceforge: digital-trace extraction engine for website investigations."""

from .config import AppConfig, load_config
from .controller import TraceController
from .errors import TraceError
from .fixture import FixtureTransport
from .model import Target, TraceKind, TraceResult, TraceStatus, make_target
from .transport import ProxyConfig, RealTransport, Transport

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "FixtureTransport",
    "ProxyConfig",
    "RealTransport",
    "Target",
    "TraceController",
    "TraceError",
    "TraceKind",
    "TraceResult",
    "TraceStatus",
    "Transport",
    "load_config",
    "make_target",
    "__version__",
]
