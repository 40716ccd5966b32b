"""Coherent and reverse coherent information of small quantum channels."""
from .linalg import DomainError, PreconditionError
from .channels import ChannelSpec, KrausChannel, RangeError
from .qinfo import coherent_information, reverse_coherent_information
from .closedform import InputParams
from .capacity import optimize_population

__all__ = [
    "ChannelSpec",
    "DomainError",
    "InputParams",
    "KrausChannel",
    "PreconditionError",
    "RangeError",
    "coherent_information",
    "optimize_population",
    "reverse_coherent_information",
]
__version__ = "0.1.0"
