from .cli import main
from .server import ServiceConfig, create_app, run_server

__all__ = ["ServiceConfig", "create_app", "main", "run_server"]
