"""Lifts of circle homeomorphisms, translation numbers and the Euler cocycle.

The circle is ``R/Z``.  A lift is a strictly increasing ``f: R -> R`` with
``f(x + 1) = f(x) + 1``.  Composition ``f.compose(g)`` is ``f o g``.

Euler cocycle convention: with ``n(f)`` the normalized lift (``n(f)(0)`` in
``[0, 1)``, up to a 1e-12 snap at the integers),

    tau(g, h) = n(g)(n(h)(0)) - n(g o h)(0)  in {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import hyp_core as hc

__all__ = [
    "CircleLift",
    "RigidRotation",
    "MobiusLift",
    "CompositeLift",
    "FunctionLift",
    "NotInvertibleError",
    "WitnessSearchError",
    "Quasimorphism",
    "normalized_lift",
    "euler_cocycle",
    "homogeneous_euler",
    "translation_number",
    "integer_translation_oracle",
    "elliptic_rotation_oracle",
    "defect_scan",
    "rotation_quasimorphism",
    "word_rotation_quasimorphism",
    "fixed_point_lift",
    "word_lift",
    "NonAdditivityWitness",
    "non_additivity_witness",
    "elliptic_product_search",
    "MAX_COMPOSITION_DEPTH",
]

TWO_PI = 2.0 * math.pi
MAX_COMPOSITION_DEPTH = 64


class NotInvertibleError(TypeError):
    pass


class WitnessSearchError(RuntimeError):
    pass


def _round_integer(v, what):
    # exact integers in theory; far translations are steep near their
    # repelling points and amplify rounding to ~1e-6 there
    k = round(v)
    if abs(v - k) > 1e-3:
        raise ArithmeticError(f"{what} is not an integer: {v!r}")
    return int(k)


class CircleLift:
    """Base class: subclasses implement ``__call__`` and ``shifted``."""

    def __call__(self, x):
        raise NotImplementedError

    def shifted(self, n):
        """The lift ``x -> f(x) + n`` for an integer n."""
        raise NotImplementedError

    def inverse(self):
        raise NotInvertibleError(f"{type(self).__name__} has no exact inverse")

    def compose(self, other):
        return CompositeLift([self, other])

    def normalized(self):
        """Shift so that f(0) lies in [0, 1).

        Values within 1e-12 of an integer count as that integer, so maps
        computed by different routes (f(0) = +-1e-17, say) normalize alike.
        """
        v = float(self(0.0))
        k = round(v)
        if abs(v - k) > 1e-12:
            k = math.floor(v)
        return self.shifted(-k)

    def iterate(self, x, n):
        for _ in range(n):
            x = self(x)
        return x

    def periodicity_residual(self, k=256):
        xs = np.linspace(0.0, 1.0, k, endpoint=False)
        return float(np.max(np.abs(self(xs + 1.0) - self(xs) - 1.0)))

    def is_increasing(self, k=256):
        xs = np.linspace(0.0, 1.0, k + 1)
        return bool(np.all(np.diff(self(xs)) > 0))


class RigidRotation(CircleLift):
    def __init__(self, alpha):
        self.alpha = float(alpha)

    def __call__(self, x):
        return x + self.alpha

    def shifted(self, n):
        return RigidRotation(self.alpha + n)

    def inverse(self):
        return RigidRotation(-self.alpha)

    def compose(self, other):
        if isinstance(other, RigidRotation):
            return RigidRotation(self.alpha + other.alpha)
        if isinstance(other, MobiusLift):
            return MobiusLift.from_rotation(self).compose(other)
        return super().compose(other)

    def iterate(self, x, n):
        return x + n * self.alpha

    def isometry(self):
        return hc.rotation(TWO_PI * self.alpha)

    def __repr__(self):
        return f"RigidRotation({self.alpha!r})"


class MobiusLift(CircleLift):
    """Lift of the boundary action of ``w -> e^{i a} (w - c)/(1 - conj(c) w)``.

    Evaluates ``f(x) = x + shift - Arg(1 - conj(c) e^{2 pi i x}) / pi``; the
    argument term stays in ``(-pi/2, pi/2)`` so the formula is continuous.
    """

    def __init__(self, iso, center, shift):
        self.iso = iso
        self.center = complex(center)
        self.shift = float(shift)
        self._cbar = self.center.conjugate()

    @classmethod
    def from_isometry(cls, iso):
        if iso.dim != 2:
            raise hc.DimensionError("boundary lifts need a planar isometry")
        g = iso.matrix
        pre = hc.hyperboloid_to_poincare(hc.inverse(iso).matrix[:, 0])
        c = complex(pre[0], pre[1])
        if abs(c) >= 1.0:
            # far translations: the centre rounds onto the circle
            c *= (1.0 - 2.0 ** -53) / abs(c)
        img = g @ np.array([1.0, 1.0, 0.0])
        e1 = complex(img[1], img[2])
        e1 /= abs(e1)
        phase = e1 * (1.0 - c.conjugate()) / (1.0 - c)
        return cls(iso, c, math.atan2(phase.imag, phase.real) / TWO_PI)

    @classmethod
    def from_rotation(cls, rot):
        return cls(rot.isometry(), 0.0, rot.alpha)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = 1.0 - self._cbar * np.exp(1j * TWO_PI * x)
        out = x + self.shift - np.angle(w) / math.pi
        return float(out) if out.ndim == 0 else out

    def _scalar(self, x):
        s, c = math.sin(TWO_PI * x), math.cos(TWO_PI * x)
        cb = self._cbar
        re = 1.0 - (cb.real * c - cb.imag * s)
        im = -(cb.real * s + cb.imag * c)
        return x + self.shift - math.atan2(im, re) / math.pi

    def shifted(self, n):
        return MobiusLift(self.iso, self.center, self.shift + n)

    def inverse(self):
        g = MobiusLift.from_isometry(hc.inverse(self.iso))
        k = _round_integer(-g(self(0.0)), "inverse lift offset")
        return g.shifted(k)

    def compose(self, other):
        if isinstance(other, RigidRotation):
            other = MobiusLift.from_rotation(other)
        if not isinstance(other, MobiusLift):
            return super().compose(other)
        h = MobiusLift.from_isometry(hc.compose(self.iso, other.iso))
        k = _round_integer(self(other(0.0)) - h(0.0), "composite lift offset")
        return h.shifted(k)

    def iterate(self, x, n):
        x = float(x)
        f = self._scalar
        for j in range(n):
            y = f(x)
            d = y - x
            k = round(d)
            if abs(d - k) <= 1e-15:
                # numerically at a fixed point of f - k
                return y + (n - j - 1) * k
            x = y
        return x

    def __repr__(self):
        return f"MobiusLift(center={self.center!r}, shift={self.shift!r})"


class CompositeLift(CircleLift):
    """``parts[0] o parts[1] o ...`` plus an integer offset."""

    def __init__(self, parts, offset=0):
        flat = []
        for p in parts:
            if isinstance(p, CompositeLift) and not p.offset:
                flat.extend(p.parts)
            else:
                flat.append(p)
        if len(flat) > MAX_COMPOSITION_DEPTH:
            raise ValueError(f"composition depth {len(flat)} exceeds {MAX_COMPOSITION_DEPTH}")
        self.parts = tuple(flat)
        self.offset = int(offset)

    def __call__(self, x):
        for p in reversed(self.parts):
            x = p(x)
        return x + self.offset

    def shifted(self, n):
        return CompositeLift(self.parts, self.offset + n)

    def inverse(self):
        return _composite_inverse([p.inverse() for p in reversed(self.parts)], self.offset)


def _composite_inverse(inv_parts, offset):
    # (f + n)^{-1}(y) = f^{-1}(y - n); the first applied part absorbs the offset
    head = list(inv_parts)
    head[-1] = _PreShift(head[-1], -offset)
    return CompositeLift(head)


class _PreShift(CircleLift):
    def __init__(self, f, n):
        self.f, self.n = f, int(n)

    def __call__(self, x):
        return self.f(x + self.n)

    def shifted(self, k):
        return _PreShift(self.f.shifted(k), self.n)

    def inverse(self):
        return self.f.inverse().shifted(-self.n)


class FunctionLift(CircleLift):
    """Wraps a user-supplied degree-one increasing function (no inverse)."""

    def __init__(self, fn, offset=0):
        self.fn = fn
        self.offset = int(offset)

    def __call__(self, x):
        return self.fn(x) + self.offset

    def shifted(self, n):
        return FunctionLift(self.fn, self.offset + n)


# ---------------------------------------------------------------------------


def normalized_lift(c):
    return c.normalized()


def _preimage_position(g):
    """Position in (0, 1] of the circle point that ``g`` sends to 0."""
    if isinstance(g, MobiusLift):
        v = MobiusLift.from_isometry(hc.inverse(g.iso))(0.0)
    else:
        v = float(g.inverse()(0.0))
    k = round(v)
    if abs(v - k) <= 1e-12:
        return 1.0
    return v - math.floor(v)


def euler_cocycle(g, h):
    """Inhomogeneous Euler cocycle of two circle maps given by lifts.

    With normalized lifts ``tau = ng(nh(0)) - ngh(0)``, which is 1 exactly
    when ``nh(0)`` has passed the point ``ng`` sends to 1.  Deciding it by
    that comparison avoids evaluating ``ng`` where it is steep.  A tie
    (``gh(0) = 0``) counts as passed, within the 1e-12 snap of ``normalized``.
    """
    return int(h.normalized()(0.0) >= _preimage_position(g) - 1e-12)


def homogeneous_euler(g0, g1, g2):
    """``tau(g0^{-1} g1, g1^{-1} g2)``; left invariant, values in {0, 1}."""
    if all(isinstance(g, MobiusLift) for g in (g0, g1, g2)):
        # lifts are only needed up to shifts here
        a = MobiusLift.from_isometry(hc.compose(hc.inverse(g0.iso), g1.iso))
        b = MobiusLift.from_isometry(hc.compose(hc.inverse(g1.iso), g2.iso))
        return euler_cocycle(a, b)
    return euler_cocycle(g0.inverse().compose(g1), g1.inverse().compose(g2))


def translation_number(c, iters):
    if iters < 1:
        raise ValueError("iters must be >= 1")
    return float(c.iterate(0.0, iters)) / iters


def integer_translation_oracle(c, grid=4096):
    """Translation number of a lift with a fixed point mod 1, by bracketing.

    The displacement ``f(x) - x`` has range of width < 1; the lift has
    translation number k exactly when that range contains the integer k.
    Returns None when no integer lies in the sampled range.
    """
    xs = np.linspace(0.0, 1.0, grid, endpoint=False)
    d = np.asarray(c(xs)) - xs
    lo, hi = float(d.min()), float(d.max())
    k = math.ceil(lo - 1e-12)
    return k if k <= hi + 1e-12 else None


def elliptic_rotation_oracle(m):
    """Boundary rotation number (mod 1) of an elliptic real Mat2.

    ``m`` is conjugate to ``[[cos p, -sin p], [sin p, cos p]]`` with
    ``cos p = tr/2``; on the half-plane that element turns by ``-2p`` about
    its fixed point when ``c > 0`` and by ``+2p`` when ``c < 0``.  The
    Cayley map preserves orientation, so the disk boundary turns by the same
    angle.
    """
    tr = m.trace.real
    if abs(tr) >= 2.0:
        raise ValueError("not elliptic")
    phi = math.acos(tr / 2.0)
    c = m.entries[1, 0].real
    return (-math.copysign(1.0, c) * phi / math.pi) % 1.0


@dataclass
class Quasimorphism:
    eval: Callable
    multiply: Callable
    defect_estimate: float = float("nan")

    def __call__(self, a):
        return self.eval(a)

    def coboundary(self, a, b):
        return self.eval(self.multiply(a, b)) - self.eval(a) - self.eval(b)


def defect_scan(q, pairs):
    pairs = list(pairs)
    if not pairs:
        raise ValueError("defect_scan needs a nonempty sample")
    return max(abs(q.coboundary(a, b)) for a, b in pairs)


def rotation_quasimorphism(iters=10_000):
    """Translation number on lifts; defect 1 (sampled to within 3/iters)."""
    return Quasimorphism(
        eval=lambda f: translation_number(f, iters),
        multiply=lambda f, g: f.compose(g),
        defect_estimate=1.0,
    )


def fixed_point_lift(iso):
    """The lift of a hyperbolic or parabolic boundary map with a fixed point."""
    f = MobiusLift.from_isometry(iso).normalized()
    k = integer_translation_oracle(f)
    if k is None:
        raise ValueError("boundary map has no fixed point")
    return f.shifted(-k)


def word_lift(rep, word, generator_lifts=None):
    """Lift of a word as the composition of its generators' lifts.

    This realizes the boundary action of the free group pulled back to the
    central extension: ``word_lift(uv) = word_lift(u) o word_lift(v)``.
    By default each generator gets its fixed-point lift (translation
    number 0).
    """
    if generator_lifts is None:
        generator_lifts = [fixed_point_lift(g) for g in rep.generators]
    out = RigidRotation(0.0)
    for letter in word.letters:
        g = generator_lifts[abs(letter) - 1]
        out = out.compose(g if letter > 0 else g.inverse())
    return out


def word_rotation_quasimorphism(rep, iters=10_000, generator_lifts=None):
    from .group_words import word_multiply

    if generator_lifts is None:
        generator_lifts = [fixed_point_lift(g) for g in rep.generators]
    return Quasimorphism(
        eval=lambda w: translation_number(word_lift(rep, w, generator_lifts), iters),
        multiply=word_multiply,
        defect_estimate=1.0,
    )


@dataclass
class NonAdditivityWitness:
    a: object
    b: object
    gap: float
    rot_a: float
    rot_b: float
    rot_ab: float
    oracle_gap: int
    product_trace: float


def non_additivity_witness(rep=None, max_length=4, iters=1_000_000):
    """Words a, b with Rot(a) = Rot(b) = 0 but Rot(ab) != 0.

    Rot is the translation number of ``word_lift`` with fixed-point lifts on
    the generators, i.e. the rotation quasimorphism on the central extension
    of the surface group.  Searches pairs of reduced words of length
    ``<= max_length`` in order of total length.
    """
    from .group_words import genus2_standard_rep, iter_reduced_words, word_multiply

    rep = rep or genus2_standard_rep()
    gl = [fixed_point_lift(g) for g in rep.generators]
    words = [w for w in iter_reduced_words(len(rep.generators), max_length) if len(w) > 0]
    lifts = {w: word_lift(rep, w, gl) for w in words}
    zero = [w for w in words if integer_translation_oracle(lifts[w]) == 0]
    zero.sort(key=len)
    for total in range(2, 2 * max_length + 1):
        for a in zero:
            if len(a) >= total:
                continue
            for b in zero:
                if len(a) + len(b) != total:
                    continue
                ab_lift = lifts[a].compose(lifts[b])
                k = integer_translation_oracle(ab_lift)
                if k is None or k == 0:
                    continue
                ra = translation_number(lifts[a], iters)
                rb = translation_number(lifts[b], iters)
                rab = translation_number(ab_lift, iters)
                tr = rep.evaluate_mat2(word_multiply(a, b)).trace.real
                return NonAdditivityWitness(a, b, abs(rab - ra - rb), ra, rb, rab, k, tr)
    raise WitnessSearchError(f"no non-additive pair among words of length <= {max_length}")


def elliptic_product_search(rep=None, max_length=4):
    """Look for hyperbolic a, b whose product is elliptic (|tr| < 2).

    Returns ``(a, b, |trace|)`` for the pair of smallest ``|tr(ab)|``, or
    raises ``WitnessSearchError`` carrying that smallest value.  Products
    with ``|tr| = 2`` to within 1e-7 (the identity via a relator, or
    parabolics) are skipped.
    """
    from .group_words import genus2_standard_rep, iter_reduced_words

    rep = rep or genus2_standard_rep()
    words = [w for w in iter_reduced_words(len(rep.generators), max_length) if len(w) > 0]
    mats = np.array([rep.evaluate_mat2(w).entries for w in words])
    tr_single = np.abs(np.einsum("kii->k", mats).real)
    hyper = tr_single > 2.0 + 1e-9
    words = [w for w, h in zip(words, hyper) if h]
    mats = mats[hyper]
    # tr(AB) = sum_ij A_ij B_ji
    tr = np.abs(np.einsum("aij,bji->ab", mats, mats).real)
    # |tr| = 2 to rounding is the identity (a relator) or parabolic, not elliptic
    masked = np.where(np.abs(tr - 2.0) <= 1e-7, np.inf, tr)
    i, j = np.unravel_index(np.argmin(masked), masked.shape)
    best = float(masked[i, j])
    if best < 2.0:
        return words[i], words[j], best
    err = WitnessSearchError(
        f"no elliptic product among {len(words)}^2 pairs of words of length <= {max_length}; "
        f"min |tr(ab)| = {best:.6f}"
    )
    err.min_trace = best
    raise err
