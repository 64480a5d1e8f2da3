"""omegalab: a desk-scale workbench for a self-delimiting virtual machine.

Exhaustive program enumeration with exact dyadic mass accounting, certified
brackets on the machine's halting probability, halting oracles built from
those brackets, and minimal-program (elegance) searches.
"""

from .svm import ISA_VERSION

__version__ = "0.1.0"

__all__ = ["ISA_VERSION", "__version__"]
