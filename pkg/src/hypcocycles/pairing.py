"""Fan pairings of words against the area cocycle.

For a word ``x_1 ... x_m`` with prefixes ``p_0 = e, p_1, ..., p_m`` the fan
sum adds the signed areas of the triangles ``(o, p_j o, p_{j+1} o)`` for
``j = 1 .. m-2``: the area enclosed by the orbit polygon
``o, p_1 o, ..., p_{m-1} o``.  For a relator the polygon closes up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hyp_core as hc
from .group_words import GroupRep, Word, evaluate
from .hyp_core import KleinPoint
from .simplex_volume import GeodesicSimplex, signed_area_2d

__all__ = ["FanChain", "fan_chain", "fan_pairing", "orbit_polygon", "positivity_certificate"]


@dataclass(frozen=True)
class FanChain:
    rep: GroupRep
    letters: tuple  # unreduced letter sequence
    base: KleinPoint
    prefixes: tuple

    def __post_init__(self):
        pre = [Word(())]
        for x in self.letters:
            pre.append(pre[-1] * Word((x,)))
        if tuple(pre) != tuple(self.prefixes):
            raise ValueError("prefixes are not the partial products of the letters")

    @property
    def word(self):
        return Word(self.letters)


def fan_chain(rep, letters, base=None):
    """``letters`` may be a Word, a letter sequence, or text in the rep's names."""
    if isinstance(letters, str):
        letters = _parse_raw(letters, rep.names)
    elif isinstance(letters, Word):
        letters = letters.letters
    letters = tuple(int(x) for x in letters)
    base = base if base is not None else KleinPoint.origin(rep.dim)
    pre = [Word(())]
    for x in letters:
        pre.append(pre[-1] * Word((x,)))
    return FanChain(rep, letters, base, tuple(pre))


def _parse_raw(text, names):
    """Like Word.parse but keeps the letters unreduced."""
    out = []
    for tok in text.replace("*", " ").split():
        inv = tok.endswith("^-1")
        name = tok[:-3] if inv else tok
        if name not in names:
            raise ValueError(f"unknown generator {name!r}")
        g = names.index(name) + 1
        out.append(-g if inv else g)
    return out


def orbit_polygon(chain):
    """Klein coordinates of ``p_j(base)`` for j = 0 .. m."""
    x = chain.base.hyperboloid()
    return [hc.hyperboloid_to_klein(evaluate(chain.rep, p).matrix @ x) for p in chain.prefixes]


def fan_pairing(chain):
    if chain.rep.dim != 2:
        raise hc.DimensionError("fan pairing is defined for planar representations")
    m = len(chain.letters)
    if m < 3:
        raise ValueError("fan pairing needs a word of length >= 3")
    pts = orbit_polygon(chain)
    o = pts[0]
    return float(sum(signed_area_2d(GeodesicSimplex([o, pts[j], pts[j + 1]])) for j in range(1, m - 1)))


def positivity_certificate(rep, letters=None, threshold=1e-3):
    """A nonzero pairing against a cocycle bounded by pi."""
    from .group_words import genus2_relator

    if letters is None:
        letters = genus2_relator(rep)
    chain = fan_chain(rep, letters)
    value = fan_pairing(chain)
    n_tri = max(1, len(chain.letters) - 2)
    closes = bool(np.max(np.abs(evaluate(rep, chain.word).matrix - np.eye(3))) < 1e-8)
    return {
        "word": " ".join(rep.names[abs(x) - 1] + ("^-1" if x < 0 else "") for x in chain.letters),
        "pairing": value,
        "cocycle_bound": math.pi,
        "triangles": n_tri,
        "ratio": abs(value) / (n_tri * math.pi),
        "closed": closes,
        "pass": bool(abs(value) > threshold),
    }
