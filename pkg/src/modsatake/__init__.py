"""Mod p Satake transforms for split GL(n) over F_p((t)), computed exactly.

Submodules:

``ff``          linear algebra over F_p on int64 arrays
``meataxe``     irreducibility tests and composition factors
``finred``      irreducible F_p-representations of GL(n, F_p) and their parameters
``localfield``  F_p((t)), GL(n, F), coset normal forms and positivity
``hecke``       Hecke operators, Satake maps, parabolic induction and the verification suites
``cli``         command-line reports
"""
from . import ff, finred, hecke, localfield, meataxe

__all__ = ["ff", "finred", "hecke", "localfield", "meataxe"]
__version__ = "0.1.0"
