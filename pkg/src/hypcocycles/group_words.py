"""Reduced words in free groups and their representations by isometries.

Letters are signed generator indices ``+-1 .. +-k``.  A word evaluates
left-to-right as a matrix product, so ``evaluate(rep, u * v)`` equals
``evaluate(rep, u) @ evaluate(rep, v)``.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import hyp_core as hc
from .hyp_core import Isometry, KleinPoint, Mat2

__all__ = [
    "Word",
    "GroupRep",
    "PingPongError",
    "word_multiply",
    "word_inverse",
    "free_reduce",
    "iter_reduced_words",
    "random_word",
    "evaluate",
    "evaluate_mat2",
    "projective_residual",
    "volume_cocycle",
    "octagon_vertex_radius",
    "octagon_inradius",
    "genus2_standard_rep",
    "genus2_relator",
    "vertex_cycle_word",
    "schottky_rank2",
    "schottky_disks",
    "SCHOTTKY_PARAMS",
    "ping_pong_check",
    "boundary_arc_check",
    "GENUS2_NAMES",
]

GENUS2_NAMES = ("a1", "b1", "a2", "b2")


def free_reduce(letters):
    out = []
    for x in letters:
        x = int(x)
        if x == 0:
            raise ValueError("0 is not a generator letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


class Word:
    """A freely reduced word; construction reduces its input."""

    __slots__ = ("letters",)

    def __init__(self, letters=()):
        self.letters = free_reduce(letters)

    @classmethod
    def identity(cls):
        return cls(())

    @classmethod
    def gen(cls, i):
        return cls((i,))

    @classmethod
    def parse(cls, text, names=GENUS2_NAMES):
        """Parse ``"a1 b1^-1"``, ``"a1*b1^-1"`` or ``"e"``.

        Powers ``x^n`` with any nonzero integer ``n`` are accepted.
        """
        text = text.strip()
        if text in ("", "e", "1"):
            return cls(())
        index = {n: i + 1 for i, n in enumerate(names)}
        letters = []
        for tok in re.split(r"[\s*.]+", text):
            if not tok:
                continue
            m = re.fullmatch(r"([A-Za-z_]\w*?)(?:\^\(?(-?\d+)\)?)?", tok)
            if m is None or m.group(1) not in index:
                raise ValueError(f"cannot parse letter {tok!r} (known: {', '.join(names)})")
            p = int(m.group(2)) if m.group(2) is not None else 1
            if p == 0:
                continue
            g = index[m.group(1)]
            letters.extend([g if p > 0 else -g] * abs(p))
        return cls(letters)

    def format(self, names=GENUS2_NAMES):
        if not self.letters:
            return "e"
        parts = []
        for x in self.letters:
            n = names[abs(x) - 1]
            parts.append(n if x > 0 else n + "^-1")
        return " ".join(parts)

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other):
        return word_multiply(self, other)

    def inverse(self):
        return word_inverse(self)

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        return f"Word({list(self.letters)})"

    def __str__(self):
        return self.format()


def word_multiply(u, v):
    return Word(u.letters + v.letters)


def word_inverse(u):
    return Word(tuple(-x for x in reversed(u.letters)))


def iter_reduced_words(k, max_len):
    """All reduced words on k generators, by length then lexicographically."""
    alphabet = [x for i in range(1, k + 1) for x in (i, -i)]
    yield Word(())
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in alphabet:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        for w in nxt:
            yield Word(w)
        layer = nxt


def random_word(rng, k, length):
    """Uniform reduced word of exactly ``length`` letters."""
    letters = []
    for _ in range(length):
        while True:
            x = int(rng.integers(1, k + 1)) * (1 if rng.random() < 0.5 else -1)
            if not letters or letters[-1] != -x:
                break
        letters.append(x)
    return Word(letters)


# ---------------------------------------------------------------------------
# representations


def _fmt17(x):
    return format(float(x), ".17g")


@dataclass(frozen=True)
class GroupRep:
    generators: tuple
    dim: int
    label: str = ""
    names: tuple = ()
    mat2: tuple = ()
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("a representation needs at least one generator")
        for g in gens:
            if not isinstance(g, Isometry):
                raise TypeError("generators must be Isometry values")
            if g.dim != self.dim:
                raise hc.DimensionError(f"generator of dim {g.dim} in a dim-{self.dim} representation")
        object.__setattr__(self, "generators", gens)
        names = tuple(self.names) or _default_names(len(gens))
        if len(names) != len(gens):
            raise ValueError("one name per generator")
        object.__setattr__(self, "names", names)
        m2 = tuple(self.mat2)
        if m2 and len(m2) != len(gens):
            raise ValueError("one Mat2 lift per generator")
        object.__setattr__(self, "mat2", m2)

    @property
    def rank(self):
        return len(self.generators)

    def word(self, text):
        return Word.parse(text, self.names)

    def format(self, w):
        return w.format(self.names)

    def evaluate(self, w):
        return evaluate(self, w)

    def evaluate_mat2(self, w):
        return evaluate_mat2(self, w)

    def to_json(self):
        """Structured text; matrices row-major with 17 significant digits."""

        def mat(a):
            return "[" + ", ".join("[" + ", ".join(_fmt17(x) for x in row) + "]" for row in a) + "]"

        lines = [
            "{",
            f'  "label": {json.dumps(self.label)},',
            f'  "dim": {self.dim},',
            f'  "names": {json.dumps(list(self.names))},',
            '  "generators": [' + ", ".join(mat(g.matrix) for g in self.generators) + "]",
        ]
        if self.mat2:
            re_ = ", ".join(mat(m.entries.real) for m in self.mat2)
            im_ = ", ".join(mat(m.entries.imag) for m in self.mat2)
            lines[-1] += ","
            lines.append(f'  "mat2_real": [{re_}],')
            lines.append(f'  "mat2_imag": [{im_}]')
        lines.append("}")
        return "\n".join(lines)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        gens = tuple(Isometry(np.array(g)) for g in d["generators"])
        m2 = ()
        if "mat2_real" in d:
            m2 = tuple(
                Mat2(np.array(r) + 1j * np.array(i)) for r, i in zip(d["mat2_real"], d["mat2_imag"])
            )
        return cls(gens, d["dim"], d.get("label", ""), tuple(d["names"]), m2)


def _default_names(k):
    if k == 2:
        return ("a", "b")
    if k == 4:
        return GENUS2_NAMES
    return tuple(f"g{i}" for i in range(1, k + 1))


def _check_letters(rep, w):
    k = rep.rank
    for x in w.letters:
        if not 1 <= abs(x) <= k:
            raise ValueError(f"letter {x} out of range for {k} generators")


def evaluate(rep, w):
    """Isometry of a word.

    With Mat2 lifts the product is taken in SL(2), whose entries grow like
    the square root of the Lorentz entries, and converted once at the end.
    """
    _check_letters(rep, w)
    m = np.eye(rep.dim + 1)
    if not w.letters:
        return Isometry(m)
    if rep.mat2:
        m2 = evaluate_mat2(rep, w)
        return hc.from_sl2_real(m2) if rep.dim == 2 else hc.from_sl2_complex(m2)
    mats = [g.matrix for g in rep.generators]
    invs = [hc.inverse(g).matrix for g in rep.generators]
    for i, x in enumerate(w.letters, 1):
        m = m @ (mats[x - 1] if x > 0 else invs[-x - 1])
        if i % hc.RENORMALIZE_EVERY == 0:
            m = hc.renormalize_lorentz(m)
    if len(w.letters) > 1:
        m = hc.renormalize_lorentz(m)
    return Isometry(m)


def evaluate_mat2(rep, w):
    if not rep.mat2:
        raise ValueError(f"representation {rep.label!r} has no Mat2 lifts")
    _check_letters(rep, w)
    m = np.eye(2, dtype=complex)
    for x in w.letters:
        g = rep.mat2[abs(x) - 1]
        m = m @ (g.entries if x > 0 else g.inverse().entries)
    return Mat2.unit(m)


def projective_residual(m):
    """Distance of a Mat2 from +-I."""
    e = m.entries
    eye = np.eye(2)
    return float(min(np.max(np.abs(e - eye)), np.max(np.abs(e + eye))))


def volume_cocycle(rep, words, base=None, tol=1e-8):
    """Signed volume of the simplex on the orbit points ``w_i(base)``.

    In the plane each angle is measured after moving its vertex to the
    origin by ``w_i^-1`` and a translation of the base point, so long words
    (orbit points far past the reach of Klein coordinates) stay accurate.
    """
    from .simplex_volume import GeodesicSimplex, signed_area_centred, signed_volume

    words = list(words)
    if len(words) != rep.dim + 1:
        raise ValueError(f"need {rep.dim + 1} words for a dim-{rep.dim} cocycle, got {len(words)}")
    base = base if base is not None else KleinPoint.origin(rep.dim)
    if rep.dim != 2:
        pts = [hc.apply(evaluate(rep, w), base) for w in words]
        return signed_volume(GeodesicSimplex(pts), tol=tol)
    if len(set(words)) < 3:
        return 0.0
    xb = base.hyperboloid()
    centre = _to_origin(xb)
    views = []
    for i in range(3):
        gi = words[i].inverse()
        pair = [centre @ evaluate(rep, gi * words[(i + k) % 3]).matrix @ xb for k in (1, 2)]
        if any(y[0] - 1.0 < 1e-13 for y in pair):  # distinct words, same point
            return 0.0
        views.append(pair)
    return signed_area_centred(views)


def _to_origin(x):
    """Lorentz boost taking the hyperboloid point x to the origin."""
    n = len(x)
    e0 = np.zeros(n)
    e0[0] = 1.0
    a = x + e0
    j = hc.lorentz_form(n - 1)
    return np.eye(n) + np.outer(a, a) @ j / (1.0 + x[0]) - 2.0 * np.outer(e0, x) @ j


# ---------------------------------------------------------------------------
# the genus-2 surface group


def octagon_interior_angle(r):
    """Interior angle of the regular octagon with Poincare vertex radius r.

    Computed from hyperboloid tangent vectors at a vertex, towards its two
    neighbours.
    """
    from .simplex_volume import vertex_angle

    ang = [(2 * k - 1) * math.pi / 8 for k in range(3)]
    pts = [hc.poincare_to_hyperboloid(np.array([r * math.cos(a), r * math.sin(a)])) for a in ang]
    return vertex_angle(pts[1], pts[0], pts[2])


def octagon_vertex_radius(angle_sum=2.0 * math.pi, tol=1e-15):
    """Poincare radius of the regular octagon whose angles sum to ``angle_sum``.

    Bisection on the angle-sum function, which decreases from 6 pi
    (Euclidean octagon) to 0 (ideal octagon) as the radius grows.
    """
    lo, hi = 1e-6, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 8.0 * octagon_interior_angle(mid) > angle_sum:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def octagon_inradius(r=None):
    """Hyperbolic distance from the centre to a side midpoint."""
    r = octagon_vertex_radius() if r is None else r
    ang = math.pi / 8
    v0 = hc.poincare_to_hyperboloid(np.array([r * math.cos(ang), -r * math.sin(ang)]))
    v1 = hc.poincare_to_hyperboloid(np.array([r * math.cos(ang), r * math.sin(ang)]))
    mid = v0 + v1
    mid = mid / math.sqrt(-hc.minkowski(mid, mid))
    return math.acosh(mid[0])


def _disk_translation_mat2(theta, d):
    """Half-plane Mat2 of the disk translation by d towards angle theta."""
    ch, sh = math.cosh(d / 2), math.sinh(d / 2)
    u = np.array([[ch, sh * complex(math.cos(theta), math.sin(theta))],
                  [sh * complex(math.cos(theta), -math.sin(theta)), ch]])
    m = hc._CAYLEY_INV @ u @ hc._CAYLEY
    return Mat2(m.real)


def genus2_standard_rep():
    """Side pairings of the regular octagon with all angles pi/4.

    Sides are numbered 0..7 counterclockwise, side k facing angle
    k pi/4.  Generator k (k = 0..3, named a1, b1, a2, b2) translates along
    the diameter through the midpoints of sides k and k+4, carrying side
    k+4 onto side k and the octagon onto its neighbour across side k.
    """
    r = octagon_vertex_radius()
    h = octagon_inradius(r)
    gens, m2 = [], []
    for k in range(4):
        theta = k * math.pi / 4
        gens.append(hc.translation(theta, 2 * h))
        m2.append(_disk_translation_mat2(theta, 2 * h))
    return GroupRep(tuple(gens), 2, "genus2-octagon", GENUS2_NAMES, tuple(m2),
                    params={"vertex_radius": r, "inradius": h})


def side_generator_letter(side):
    """Letter appended to the deck word when a path leaves the octagon through ``side``."""
    side %= 8
    return side + 1 if side < 4 else -(side - 3)


def vertex_cycle_word(rep=None, start_vertex=0, max_steps=64):
    """The relator read off by walking once around a vertex of the tiling.

    Tiles around the vertex ``v`` of the base octagon are ``g D``; from each
    tile we leave through the side at ``v`` we did not enter by.  The
    product of the crossed generators returns to the identity after a full
    turn.
    """
    rep = rep or genus2_standard_rep()
    r = rep.params.get("vertex_radius", octagon_vertex_radius())
    verts = [np.array([r * math.cos((2 * k - 1) * math.pi / 8), r * math.sin((2 * k - 1) * math.pi / 8)])
             for k in range(8)]
    target = hc.poincare_to_hyperboloid(verts[start_vertex])
    g = np.eye(3)
    letters = []
    came_from = None  # side of the current tile we entered through
    for _ in range(max_steps):
        q = hc.hyperboloid_to_poincare(np.linalg.solve(g, target))
        j = int(np.argmin([np.linalg.norm(q - v) for v in verts]))
        if np.linalg.norm(q - verts[j]) > 1e-6:
            raise RuntimeError("vertex walk lost track of the vertex")
        # vertex j lies on sides j-1 and j; turning counterclockwise around v
        # exits through side j when we entered through side j-1
        sides = ((j - 1) % 8, j)
        exit_side = sides[1] if came_from != sides[1] else sides[0]
        x = side_generator_letter(exit_side)
        letters.append(x)
        gen = rep.generators[abs(x) - 1].matrix
        g = g @ (gen if x > 0 else np.linalg.inv(gen))
        came_from = (exit_side + 4) % 8
        if np.max(np.abs(g - np.eye(3))) < 1e-8:
            return Word(letters)
    raise RuntimeError("vertex walk did not close")


def genus2_relator(rep=None):
    return vertex_cycle_word(rep)


# ---------------------------------------------------------------------------
# Schottky group in PSL(2, C)

SCHOTTKY_PARAMS = {
    "centers": {"a-": -2.0, "a+": 2.0, "b-": -2.0j, "b+": 2.0j},
    "radius": 1.0,
    "a": [[2, 3], [1, 2]],
    "b": [[2j, -5], [1, 2j]],
}


def schottky_disks():
    """(center, radius) for D_a-, D_a+, D_b-, D_b+ on the Riemann sphere."""
    c, r = SCHOTTKY_PARAMS["centers"], SCHOTTKY_PARAMS["radius"]
    return [(complex(c[k]), r) for k in ("a-", "a+", "b-", "b+")]


def schottky_rank2():
    """Classical Schottky group on the disks |z -+ 2| = 1, |z -+ 2i| = 1.

    ``a(z) = (2z + 3)/(z + 2)`` carries the outside of D(-2, 1) onto the
    inside of D(2, 1); ``b(z) = (2iz - 5)/(z + 2i)`` does the same for
    D(-2i, 1) and D(2i, 1).
    """
    m2 = (Mat2(SCHOTTKY_PARAMS["a"]), Mat2(SCHOTTKY_PARAMS["b"]))
    gens = tuple(hc.from_sl2_complex(m) for m in m2)
    return GroupRep(gens, 3, "schottky-rank2", ("a", "b"), m2)


class PingPongError(ValueError):
    pass


def _circle_image(m, center, radius):
    """Image circle of |z - center| = radius under the Mobius map m."""
    pts = [m(center + radius * complex(math.cos(t), math.sin(t))) for t in (0.3, 2.4, 4.4)]
    if any(cmath_isinf(p) for p in pts):
        return None
    a, b, c = pts
    # circumcentre of three points
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if abs(d) < 1e-300:
        return None
    aa, bb, cc = abs(a) ** 2, abs(b) ** 2, abs(c) ** 2
    ux = (aa * (b.imag - c.imag) + bb * (c.imag - a.imag) + cc * (a.imag - b.imag)) / d
    uy = (aa * (c.real - b.real) + bb * (a.real - c.real) + cc * (b.real - a.real)) / d
    cen = complex(ux, uy)
    return cen, abs(a - cen)


def cmath_isinf(z):
    return math.isinf(z.real) or math.isinf(z.imag)


def ping_pong_check(rep, disks, margin=1e-6):
    """Ping-pong certificate for a rank-2 Kleinian group.

    ``disks`` is ``[(c, r)] * 4`` for D_a-, D_a+, D_b-, D_b+.  Passes when
    each generator maps the outside of its minus disk into its plus disk
    and its inverse maps the outside of the plus disk into the minus disk.
    Containment is checked on the image circles, with ``margin`` slack for
    tangency.
    """
    disks = [(complex(c), float(r)) for c, r in disks]
    if len(disks) != 4:
        raise PingPongError("ping-pong needs four disks")
    for (c1, r1), (c2, r2) in itertools.combinations(disks, 2):
        if abs(c1 - c2) <= r1 + r2 - margin:
            raise PingPongError("ping-pong disks overlap")
    if not rep.mat2 or rep.rank != 2:
        raise ValueError("ping_pong_check needs a rank-2 representation with Mat2 lifts")
    pairs = [(rep.mat2[0], disks[0], disks[1]), (rep.mat2[1], disks[2], disks[3])]
    for m, dminus, dplus in pairs:
        for g, src, dst in ((m, dminus, dplus), (m.inverse(), dplus, dminus)):
            img = _circle_image(g, *src)
            if img is None:
                return False
            cen, rad = img
            # the outside of src goes to the side of the image circle holding g(inf)
            ginf = g(complex("inf"))
            if cmath_isinf(ginf) or abs(ginf - cen) >= rad:
                return False
            if abs(cen - dst[0]) + rad > dst[1] + margin:
                return False
    return True


def boundary_arc_check(rep, arcs, pairs, margin=1e-6):
    """Ping-pong on the boundary circle of H^2.

    ``arcs`` maps labels to ``(center_angle, half_width)``; ``pairs`` lists
    ``(generator_index, minus_label, plus_label)``.  Each generator must
    carry the complement of its minus arc into its plus arc, and its
    inverse the complement of the plus arc into the minus arc.
    """
    items = list(arcs.values())
    for (c1, w1), (c2, w2) in itertools.combinations(items, 2):
        d = abs((c1 - c2 + math.pi) % (2 * math.pi) - math.pi)
        if d <= w1 + w2:
            raise PingPongError("arcs overlap")

    def act(g, angle):
        x = np.array([1.0, math.cos(angle), math.sin(angle)])
        y = g.matrix @ x
        return math.atan2(y[2], y[1])

    def rel(angle, center):
        return (angle - center + math.pi) % (2 * math.pi) - math.pi

    for gi, lm, lp in pairs:
        g = rep.generators[gi]
        for h, src, dst in ((g, arcs[lm], arcs[lp]), (hc.inverse(g), arcs[lp], arcs[lm])):
            c, w = src
            # complement of src, traversed counterclockwise
            e1, mid, e2 = c + w, c + math.pi, c - w + 2 * math.pi
            u = [rel(act(h, t), dst[0]) for t in (e1, mid, e2)]
            if any(abs(v) > dst[1] - margin for v in u):
                return False
            if not u[0] < u[1] < u[2]:
                return False
    return True
