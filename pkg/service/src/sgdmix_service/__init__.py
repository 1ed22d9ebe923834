"""HTTP refinement microservice compatible with the sgdmix remote refiner."""

from .app import (
    Backend,
    ServiceConfig,
    ServiceError,
    create_app,
    split_bind,
    stub_refine,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "ServiceConfig",
    "ServiceError",
    "create_app",
    "split_bind",
    "stub_refine",
    "__version__",
]
