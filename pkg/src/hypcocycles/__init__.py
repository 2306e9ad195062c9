"""Volume and Euler cocycles, finger-pushing maps and the transfer integral
on a genus-2 hyperbolic surface."""

from . import circle_dynamics, finger_push, group_words, hyp_core, pairing, simplex_volume, surface_model
from .group_words import GroupRep, Word, genus2_standard_rep, schottky_rank2
from .hyp_core import Isometry, KleinPoint, Mat2

__version__ = "0.1.0"

__all__ = [
    "circle_dynamics",
    "finger_push",
    "group_words",
    "hyp_core",
    "pairing",
    "simplex_volume",
    "surface_model",
    "GroupRep",
    "Word",
    "Isometry",
    "KleinPoint",
    "Mat2",
    "genus2_standard_rep",
    "schottky_rank2",
]
