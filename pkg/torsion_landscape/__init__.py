from .analytic.field import ImplicitField, RootConfig
from .analytic.predictions import predictions
from .cmd import main
from .context import Context
from .server.app import run_server

__version__ = "0.1.0"

__all__ = [__version__, Context, ImplicitField, RootConfig, main, predictions, run_server]
