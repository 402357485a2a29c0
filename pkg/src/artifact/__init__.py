"""Exact entropy-structure models, their transfinite sequences, and interval realizations."""

from .ordinal import Ordinal
from .constructors import general_model, verify_certificate
from .transfinite import norm_u, order_of_accumulation, u_gamma

__version__ = "0.1.0"

__all__ = ["Ordinal", "general_model", "verify_certificate", "norm_u",
           "order_of_accumulation", "u_gamma", "__version__"]
