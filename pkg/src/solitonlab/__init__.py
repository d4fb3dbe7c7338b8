"""solitonlab: a workbench for classical integrable hierarchies.

Symbolic KdV/KP engines over an exact differential-polynomial ring,
pseudo-differential and shift-operator algebra with certified truncation,
closed-form tau functions with exact calculus, bilinear (Hirota)
verification, Toda lattice flows, integrable pole dynamics with Weierstrass
functions, and a truncated free-fermion realization of tau functions.
"""

from . import (
    bilinear,
    diffpoly,
    fermion,
    kdv,
    kp,
    poledyn,
    psdo,
    shiftop,
    tau,
    toda,
    weier,
)

__all__ = [
    "bilinear",
    "diffpoly",
    "fermion",
    "kdv",
    "kp",
    "poledyn",
    "psdo",
    "shiftop",
    "tau",
    "toda",
    "weier",
]

__version__ = "0.1.0"
