"""Verification and construction toolkit for matrix-product unitaries."""

from __future__ import annotations

__version__ = "0.1.0"

from .mpo import General, MpoChain, Open, Periodic, SiteTensor, materialize
from .unitarity import check_canonical_form, check_unitarity_recursive, to_canonical_form
from .uniform import UniformMpu

__all__ = [
    "__version__",
    "General",
    "MpoChain",
    "Open",
    "Periodic",
    "SiteTensor",
    "UniformMpu",
    "materialize",
    "check_canonical_form",
    "check_unitarity_recursive",
    "to_canonical_form",
]
