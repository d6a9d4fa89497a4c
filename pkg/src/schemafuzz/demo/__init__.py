from .app import DemoService, load_ground_truth, load_openapi_document
from .server import serve, serve_in_background

__all__ = [
    "DemoService",
    "load_ground_truth",
    "load_openapi_document",
    "serve",
    "serve_in_background",
]
