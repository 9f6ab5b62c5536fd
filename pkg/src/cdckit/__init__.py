"""cdckit — clock/reset domain crossing verification toolkit.

Static analysis of multi-clock gate-level netlists, cycle simulation with
metastability injection at crossing capture flops, a four-bin-per-crossing
coverage model, and SystemVerilog checker/coverage generation.
"""

__version__ = "0.1.0"

from .errors import CdcError

__all__ = ["CdcError", "__version__"]
