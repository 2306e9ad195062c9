"""The genus-2 surface as a regular octagon with opposite sides paired.

Points are stored in Poincare-disk coordinates; inclusion and crossing
tests run in Klein coordinates, where the octagon is a Euclidean convex
polygon.  Side k joins vertices k and k+1 and faces the angle k pi/4.

Deck words: leaving the octagon through side k lands in the tile
``s_k D`` with ``s_k = a1, b1, a2, b2`` for k = 0..3 and the inverses for
k = 4..7.  A path that crosses sides k_1, k_2, ... has deck word
``s_k1 s_k2 ...``.  The half-open fundamental domain owns sides 0..3 and,
of the eight vertices (all one point on the surface), only vertex 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import hyp_core as hc
from .group_words import (
    GroupRep,
    Word,
    genus2_standard_rep,
    octagon_inradius,
    octagon_vertex_radius,
    side_generator_letter,
    vertex_cycle_word,
)
from .hyp_core import Isometry

__all__ = [
    "FundamentalPolygon",
    "SurfacePoint",
    "SurfacePath",
    "MCEstimate",
    "CanonicalizeError",
    "PathLiftError",
    "COLLAR",
    "MAX_DECK_STEPS",
    "build_octagon",
    "default_octagon",
    "canonicalize",
    "canonicalize_many",
    "system_of_paths",
    "lift_path",
    "core_loop",
    "isometry_from_segments",
    "sample_points",
    "sample_area",
    "area_measure",
]

COLLAR = 1e-12
MAX_DECK_STEPS = 64
OWNED_VERTEX = 1


class CanonicalizeError(RuntimeError):
    pass


class PathLiftError(ValueError):
    pass


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _translation_to(x):
    """The translation along the geodesic through the origin carrying it to x."""
    p = hc.hyperboloid_to_poincare(x)
    d = math.acosh(max(1.0, float(x[0])))
    theta = math.atan2(p[1], p[0]) if d > 0 else 0.0
    return hc.translation(theta, d)


def isometry_from_segments(a, b, a2, b2):
    """Orientation-preserving isometry taking a -> a2 and b -> b2 (Poincare points).

    Requires ``d(a, b) = d(a2, b2)``; built as translate, rotate, translate.
    """
    xa, xb = hc.poincare_to_hyperboloid(np.asarray(a)), hc.poincare_to_hyperboloid(np.asarray(b))
    ya, yb = hc.poincare_to_hyperboloid(np.asarray(a2)), hc.poincare_to_hyperboloid(np.asarray(b2))
    ta, tb = _translation_to(xa), _translation_to(ya)
    pb = hc.inverse(ta).matrix @ xb
    qb = hc.inverse(tb).matrix @ yb
    phi = math.atan2(qb[2], qb[1]) - math.atan2(pb[2], pb[1])
    m = tb.matrix @ hc.rotation(phi).matrix @ hc.inverse(ta).matrix
    return Isometry(hc.renormalize_lorentz(m))


@dataclass(frozen=True)
class FundamentalPolygon:
    vertices: np.ndarray  # (8, 2) Poincare
    pairings: tuple  # (side, partner, Isometry mapping side onto partner)
    rep: GroupRep
    vertex_radius: float
    inradius: float
    vertex_words: tuple = ()  # deck word carrying vertex j to the owned vertex
    klein_vertices: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        kv = hc.poincare_to_klein(self.vertices)
        kv.setflags(write=False)
        object.__setattr__(self, "klein_vertices", kv)

    @property
    def basepoint(self):
        return np.zeros(2)

    def side_endpoints(self, k, klein=False):
        v = self.klein_vertices if klein else self.vertices
        return v[k % 8], v[(k + 1) % 8]

    def side_values(self, p):
        """Orientation values of Poincare points against the eight sides.

        Positive inside; ``(..., 8)``.
        """
        k = hc.poincare_to_klein(np.asarray(p, dtype=float))
        kv = self.klein_vertices
        out = []
        for j in range(8):
            a, b = kv[j], kv[(j + 1) % 8]
            e = b - a
            out.append(_cross(e, k - a) / np.hypot(*e))
        return np.stack(out, axis=-1)

    def contains(self, p, collar=COLLAR):
        return np.all(self.side_values(p) >= -collar, axis=-1)

    def angle_sum(self):
        from .simplex_volume import vertex_angle

        x = hc.poincare_to_hyperboloid(self.vertices)
        return sum(vertex_angle(x[j], x[(j - 1) % 8], x[(j + 1) % 8]) for j in range(8))

    def area(self):
        """Hyperbolic area by fanning from the centre into eight triangles."""
        from .simplex_volume import GeodesicSimplex, signed_area_2d

        o = np.zeros(2)
        kv = self.klein_vertices
        return sum(signed_area_2d(GeodesicSimplex([o, kv[j], kv[(j + 1) % 8]])) for j in range(8))

    def pairing(self, side):
        return self.pairings[side % 8][2]

    def pairing_residual(self):
        """Max pointwise error of the side pairings, and of partner = inverse."""
        worst = 0.0
        ts = np.linspace(0.0, 1.0, 9)
        for side, partner, g in self.pairings:
            a, b = self.side_endpoints(side, klein=True)
            c, d = self.side_endpoints(partner, klein=True)
            for t in ts:
                x = hc.klein_to_hyperboloid((1 - t) * a + t * b)
                y = hc.klein_to_hyperboloid(t * c + (1 - t) * d)
                img = hc.hyperboloid_to_klein(g.matrix @ x)
                worst = max(worst, float(np.max(np.abs(img - hc.hyperboloid_to_klein(y)))))
            back = self.pairings[partner][2]
            worst = max(worst, float(np.max(np.abs(back.matrix @ g.matrix - np.eye(3)))) / 100.0)
        return worst

    def to_json(self):
        import json

        def f17(x):
            return format(float(x), ".17g")

        verts = ", ".join("[" + f17(x) + ", " + f17(y) + "]" for x, y in self.vertices)
        pairs = []
        for s, p, g in self.pairings:
            m = "[" + ", ".join("[" + ", ".join(f17(v) for v in row) + "]" for row in g.matrix) + "]"
            pairs.append(f'{{"side": {s}, "partner": {p}, "matrix": {m}}}')
        return "{\n" + f'  "vertices": [{verts}],\n  "pairings": [' + ", ".join(pairs) + "]\n}"


def build_octagon():
    """Regular octagon with angle sum 2 pi and opposite sides paired.

    The pairings are computed from the vertex positions alone: side k is
    carried onto side k+4 with its endpoints swapped in order, so that the
    image octagon lies across the partner side.
    """
    r = octagon_vertex_radius()
    h = octagon_inradius(r)
    ang = [(2 * k - 1) * math.pi / 8 for k in range(8)]
    verts = np.array([[r * math.cos(a), r * math.sin(a)] for a in ang])
    pairings = []
    for k in range(8):
        p = (k + 4) % 8
        g = isometry_from_segments(verts[k], verts[(k + 1) % 8], verts[(p + 1) % 8], verts[p])
        pairings.append((k, p, g))
    rep = genus2_standard_rep()
    vwords = _vertex_words(rep)
    return FundamentalPolygon(verts, tuple(pairings), rep, r, h, vwords)


def _vertex_words(rep):
    """For each vertex j, a deck word carrying vertex j to the owned vertex."""
    r = rep.params["vertex_radius"]
    verts = [np.array([r * math.cos((2 * k - 1) * math.pi / 8), r * math.sin((2 * k - 1) * math.pi / 8)])
             for k in range(8)]
    x = hc.poincare_to_hyperboloid(verts[OWNED_VERTEX])
    rel = vertex_cycle_word(rep, OWNED_VERTEX)
    # tiles around v = vertex 1 are g_i D for the prefixes g_i of the relator;
    # v is the corner g_i^{-1}(v) of D, and g_i carries that corner back to v
    out = [None] * 8
    pre = Word(())
    for x_letter in (0,) + rel.letters[:-1]:
        if x_letter:
            pre = pre * Word((x_letter,))
        g = rep.evaluate(pre)
        q = hc.hyperboloid_to_poincare(np.linalg.solve(g.matrix, x))
        j = int(np.argmin([np.linalg.norm(q - v) for v in verts]))
        if out[j] is None:
            out[j] = pre
    if any(w is None for w in out):
        raise RuntimeError("vertex cycle does not visit every corner")
    return tuple(out)


_DEFAULT = None


def default_octagon():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_octagon()
    return _DEFAULT


# ---------------------------------------------------------------------------
# points and canonical form


@dataclass(frozen=True)
class SurfacePoint:
    model_coords: np.ndarray
    canonical: bool = True

    def __post_init__(self):
        c = np.array(self.model_coords, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "model_coords", c)

    def __repr__(self):
        return f"SurfacePoint({self.model_coords.tolist()}, canonical={self.canonical})"


def _move(mat, p):
    x = hc.poincare_to_hyperboloid(p)
    return hc.hyperboloid_to_poincare(x @ mat.T)


def is_canonical(poly, p, collar=COLLAR):
    """Inside the closed octagon, off the non-owned sides, and not a non-owned vertex."""
    p = np.asarray(p, dtype=float)
    vals = poly.side_values(p)
    if np.any(vals < -collar) or np.any(vals[4:] <= collar):
        return False
    return all(j == OWNED_VERTEX or np.linalg.norm(p - poly.vertices[j]) > 1e-9 for j in range(8))


def canonicalize(p, poly=None):
    """Representative in the half-open domain and the deck word moving p there.

    Returns ``(SurfacePoint, deck)`` with ``deck(p)`` equal to the
    representative.  Points outside are pulled back through the side
    whose pairing brings them closest to the centre (the octagon is the
    Dirichlet domain of the centre, so each step strictly decreases that
    distance).
    """
    poly = poly or default_octagon()
    q = np.array(p, dtype=float)
    if q.shape != (2,) or float(q @ q) >= 1.0:
        raise ValueError("canonicalize needs a point of the open unit disk")
    deck = Word(())
    gens = poly.rep
    for _ in range(MAX_DECK_STEPS):
        vals = poly.side_values(q)
        if np.all(vals >= -COLLAR):
            break
        best, best_r = None, None
        for k in np.nonzero(vals < -COLLAR)[0]:
            cand = _move(poly.pairing(k).matrix, q)
            r = float(cand @ cand)
            if best is None or r < best_r - 1e-15:
                best, best_r = int(k), r
        q = _move(poly.pairing(best).matrix, q)
        deck = Word((-side_generator_letter(best),)) * deck
    else:
        raise CanonicalizeError(f"point needs more than {MAX_DECK_STEPS} deck moves")
    # boundary conventions
    for j in range(8):
        if j != OWNED_VERTEX and np.linalg.norm(q - poly.vertices[j]) <= 1e-9:
            w = poly.vertex_words[j]
            q = _move(gens.evaluate(w).matrix, q)
            deck = w * deck
            return SurfacePoint(q, True), deck
    vals = poly.side_values(q)
    for k in range(4, 8):
        if abs(vals[k]) <= COLLAR:
            q = _move(poly.pairing(k).matrix, q)
            deck = Word((-side_generator_letter(k),)) * deck
            break
    return SurfacePoint(q, True), deck


def canonicalize_many(points, poly=None):
    """Vectorized canonicalization of interior-ish points ``(N, 2)``.

    Returns ``(points, decks)`` with decks as tuples of letters.  Vertex
    collars are not special-cased here; use ``canonicalize`` for those.
    """
    poly = poly or default_octagon()
    q = np.array(points, dtype=float)
    decks = [Word(()) for _ in range(len(q))]
    mats = [poly.pairing(k).matrix for k in range(8)]
    for _ in range(MAX_DECK_STEPS):
        vals = poly.side_values(q)
        bad = np.any(vals < -COLLAR, axis=1)
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        x = hc.poincare_to_hyperboloid(q[idx])
        best = np.full(len(idx), -1)
        best_r = np.full(len(idx), np.inf)
        for k in range(8):
            out = vals[idx, k] < -COLLAR
            y0 = x @ mats[k][0]
            better = out & (y0 < best_r - 1e-15)
            best[better] = k
            best_r[better] = y0[better]
        for k in range(8):
            sel = idx[best == k]
            if len(sel):
                q[sel] = _move(mats[k], q[sel])
                lw = Word((-side_generator_letter(k),))
                for i in sel:
                    decks[i] = lw * decks[i]
    else:
        raise CanonicalizeError(f"point needs more than {MAX_DECK_STEPS} deck moves")
    vals = poly.side_values(q)
    for k in range(4, 8):
        sel = np.nonzero(np.abs(vals[:, k]) <= COLLAR)[0]
        if len(sel):
            q[sel] = _move(mats[k], q[sel])
            lw = Word((-side_generator_letter(k),))
            for i in sel:
                decks[i] = lw * decks[i]
    return q, decks


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class SurfacePath:
    """Polyline of canonical points with side-crossing annotations.

    ``crossings[j]`` lists the sides crossed, in order, between points j
    and j + 1, read in the frame of point j.
    """

    points: np.ndarray
    crossings: tuple = ()

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        cr = tuple(tuple(int(s) for s in c) for c in self.crossings)
        if not cr:
            cr = ((),) * max(0, len(pts) - 1)
        if len(cr) != max(0, len(pts) - 1):
            raise ValueError("one crossing entry per segment")
        object.__setattr__(self, "crossings", cr)

    @classmethod
    def constant(cls, p):
        return cls(np.array([p], dtype=float))

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def __len__(self):
        return len(self.points)

    def concat(self, other, tol=1e-9):
        if np.linalg.norm(self.end - other.start) > tol:
            raise ValueError("paths do not meet")
        pts = np.concatenate([self.points, other.points[1:]])
        return SurfacePath(pts, self.crossings + other.crossings)

    def reversed(self):
        cr = tuple(tuple((s + 4) % 8 for s in reversed(c)) for c in reversed(self.crossings))
        return SurfacePath(self.points[::-1].copy(), cr)

    def crossing_count(self):
        return sum(len(c) for c in self.crossings)


def system_of_paths(x, poly=None):
    """Radial segment from the centre to a canonical point (a geodesic)."""
    p = np.asarray(x.model_coords if isinstance(x, SurfacePoint) else x, dtype=float)
    if not np.any(p):
        return SurfacePath.constant(p)
    return SurfacePath(np.array([np.zeros(2), p]))


def _segment_hits_side(poly, a, b, side, collar=1e-9):
    """Does the Klein segment a-b meet the closed side?  (Poincare inputs.)"""
    ka, kb = hc.poincare_to_klein(np.asarray([a, b]))
    c, d = poly.side_endpoints(side, klein=True)
    d1 = _cross(d - c, ka - c)
    d2 = _cross(d - c, kb - c)
    d3 = _cross(kb - ka, c - ka)
    d4 = _cross(kb - ka, d - ka)
    return d1 >= -collar and d2 <= collar and d3 * d4 <= collar


def lift_path(path, poly=None, check=True):
    """Deck word of a path: the crossing letters in order.

    With ``check``, each annotated crossing is validated: developing the
    segment into the neighbouring tile must give a Klein segment that
    leaves through the recorded side.
    """
    poly = poly or default_octagon()
    letters = []
    for j, sides in enumerate(path.crossings):
        if not sides:
            continue
        if check:
            a = path.points[j]
            tail = np.eye(3)
            for s in reversed(sides):
                x = side_generator_letter(s)
                g = poly.rep.generators[abs(x) - 1]
                tail = (g.matrix if x > 0 else hc.inverse(g).matrix) @ tail
            b = _move(tail, path.points[j + 1])
            # walk the developed segment through the recorded sides
            for s in sides:
                if not _segment_hits_side(poly, a, b, s):
                    raise PathLiftError(f"segment {j} does not meet side {s}")
                x = side_generator_letter(s)
                g = poly.rep.generators[abs(x) - 1]
                back = hc.inverse(g).matrix if x > 0 else g.matrix
                a, b = _move(back, a), _move(back, b)
        letters.extend(side_generator_letter(s) for s in sides)
    return Word(letters)


def path_from_cover(points, poly=None):
    """Annotated surface path from a polyline in the universal cover.

    ``points[0]`` must lie in the closed octagon.  Consecutive points must
    be close enough that each segment crosses at most a few sides.
    """
    poly = poly or default_octagon()
    pts = np.asarray(points, dtype=float)
    canon, decks = canonicalize_many(pts, poly)
    if decks[0].letters:
        raise ValueError("path must start in the fundamental domain")
    crossings = []
    for j in range(len(pts) - 1):
        step = decks[j] * decks[j + 1].inverse()
        crossings.append(tuple(_letter_side(x) for x in step.letters))
    return SurfacePath(canon, tuple(crossings))


def _letter_side(x):
    return x - 1 if x > 0 else (-x - 1) + 4


def core_loop(i, poly=None, steps=64):
    """Closed geodesic through the centre along the axis of generator ``i`` (1..4)."""
    poly = poly or default_octagon()
    theta = (i - 1) * math.pi / 4
    u = np.linspace(0.0, 2 * poly.inradius, steps + 1)
    x = np.stack([np.cosh(u), math.cos(theta) * np.sinh(u), math.sin(theta) * np.sinh(u)], axis=1)
    return path_from_cover(hc.hyperboloid_to_poincare(x), poly)


# ---------------------------------------------------------------------------
# area sampling


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int
    seed: int
    accepted: int = 0

    def as_dict(self):
        return {"value": self.value, "stderr": self.stderr, "n": self.n, "seed": self.seed, "accepted": self.accepted}


CHUNK = 1 << 16


def _hyp_density(p):
    return 4.0 / (1.0 - np.sum(p * p, axis=-1)) ** 2


def _sampler_geometry(poly):
    half = float(np.max(np.abs(poly.vertices)))
    box = (2 * half) ** 2
    dmax = float(_hyp_density(poly.vertices).max())
    return half, box, dmax


def _chunk_rng(seed, j):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(j,)))


def _propose(poly, seed, j, density=_hyp_density):
    """One chunk of proposals: points and their acceptance flags."""
    half, box, dmax = _sampler_geometry(poly)
    rng = _chunk_rng(seed, j)
    p = rng.uniform(-half, half, size=(CHUNK, 2))
    u = rng.random(CHUNK)
    inside = np.all(poly.side_values(p) >= 0.0, axis=1)
    acc = inside & (u * dmax < density(p))
    return p, acc


def sample_points(seed, count, poly=None):
    """``count`` points of the octagon distributed by hyperbolic area, plus proposal count.

    Chunk j uses the stream ``SeedSequence(seed, spawn_key=(j,))``; the
    accepted points are the first ``count`` acceptances in chunk order, so
    the result does not depend on how chunks are scheduled.
    """
    poly = poly or default_octagon()
    if count < 1:
        raise ValueError("count must be >= 1")
    got, total_prop, j = [], 0, 0
    need = count
    while need > 0:
        p, acc = _propose(poly, seed, j)
        idx = np.nonzero(acc)[0]
        if len(idx) >= need:
            last = idx[need - 1]
            got.append(p[idx[:need]])
            total_prop += last + 1
            need = 0
        else:
            got.append(p[idx])
            total_prop += CHUNK
            need -= len(idx)
        j += 1
    return np.concatenate(got), int(total_prop)


def sample_area(seed, count, poly=None):
    pts, _ = sample_points(seed, count, poly)
    return [SurfacePoint(p, True) for p in pts]


def area_measure(predicate, count, seed, poly=None):
    """Hyperbolic area of ``{x in octagon : predicate(x)}``.

    ``predicate`` takes an ``(N, 2)`` array of Poincare points and returns
    booleans.  Each proposal contributes ``box * dmax * [accepted and
    predicate]``; the estimate is their mean over the proposals used to
    collect ``count`` acceptances.
    """
    poly = poly or default_octagon()
    if count < 1:
        raise ValueError("count must be >= 1")
    pts, nprop = sample_points(seed, count, poly)
    hit = np.asarray(predicate(pts), dtype=bool)
    _, box, dmax = _sampler_geometry(poly)
    k = int(hit.sum())
    if k == 0:
        return MCEstimate(0.0, 0.0, nprop, seed, count)
    scale = box * dmax
    p = k / nprop
    value = scale * p
    stderr = scale * math.sqrt(p * (1 - p) * nprop / (nprop - 1)) / math.sqrt(nprop)
    return MCEstimate(value, stderr, nprop, seed, count)
