"""Finger-pushing homeomorphisms of the genus-2 surface and the cocycle gamma.

Tube i is a collar of the closed geodesic through the centre along the
axis of generator ``a_i`` (letters 1 and 3, i.e. ``a1`` and ``a2``).  On a
tube we use Fermi coordinates ``(u, sigma)``: arc length along the axis and
signed distance from it.  The chart is

    psi = u / L,   s = sigma / W(u),

with ``L`` the length of the loop and ``W`` the half-width profile, which
bulges near the centre so that the ball B sits inside ``|s| <= 1 - eta``.
The push is ``(psi, s) -> (psi + t f(|s|), s)``.

Inside the octagon the tube meets only the two sides it runs through
(``u = +-L/2``), so a forward push crosses its exit side at most once and a
backward push crosses its entry side at most once.

Composition follows the right-action convention: for a word ``x1 x2 ...``
the pushes run in the order ``x1, x2, ...``, so ``rho(vw) = rho(w) o
rho(v)`` as maps and ``gamma(vw, x) = gamma(v, x) gamma(w, rho(v) x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import hyp_core as hc
from .group_words import GroupRep, Word, evaluate, volume_cocycle
from .surface_model import (
    FundamentalPolygon,
    MCEstimate,
    SurfacePath,
    SurfacePoint,
    default_octagon,
    lift_path,
    path_from_cover,
    sample_points,
    system_of_paths,
)

__all__ = [
    "FingerSystem",
    "Tube",
    "RegionTag",
    "OUTSIDE",
    "CORE",
    "FUZZY",
    "EmbeddingError",
    "SampleFailure",
    "CocycleHandle",
    "smoothstep_profile",
    "build_finger_system",
    "push_trajectory",
    "rho_apply",
    "rho_apply_many",
    "gamma",
    "gamma_many",
    "region_classify",
    "region_masks",
    "region_measures",
    "gamma_b_estimate",
    "inequality_report",
    "area_distortion",
    "volume_handle",
    "euler_handle",
    "zero_handle",
    "antisymmetrize",
    "TUBE_LETTERS",
]

OUTSIDE, CORE, FUZZY = "Outside", "Core", "Fuzzy"
TUBE_LETTERS = (1, 3)  # a1 and a2 in the genus-2 generators


class EmbeddingError(ValueError):
    pass


class SampleFailure(RuntimeError):
    pass


def smoothstep_profile(eta):
    """f = 1 on [0, 1 - eta], cubic smoothstep down to f(1) = 0."""

    def f(y):
        y = np.abs(np.asarray(y, dtype=float))
        z = np.clip((y - (1.0 - eta)) / eta, 0.0, 1.0)
        return 1.0 - z * z * (3.0 - 2.0 * z)

    return f


@dataclass(frozen=True)
class RegionTag:
    tag: str
    tubes: tuple = ()

    def __str__(self):
        return self.tag if not self.tubes else f"{self.tag}{list(self.tubes)}"


@dataclass(frozen=True)
class Tube:
    index: int  # 0 or 1
    letter: int  # generator letter pushed along
    frame: np.ndarray  # Lorentz frame (P, T, N) of the axis
    width: float
    exit_side: int
    entry_side: int

    @property
    def frame_inv(self):
        return hc.lorentz_form(2) @ self.frame.T @ hc.lorentz_form(2)


@dataclass(frozen=True)
class FingerSystem:
    tubes: tuple
    eta: float
    r_B: float
    loop_length: float
    polygon: FundamentalPolygon = field(repr=False)
    profile: Callable = field(repr=False, compare=False)

    @property
    def half(self):
        return 0.5 * self.loop_length

    def tube_for_letter(self, x):
        for t in self.tubes:
            if abs(x) == t.letter:
                return t
        raise ValueError(f"letter {x} is not a finger-push generator")

    # chart -----------------------------------------------------------

    def fermi(self, tube, p):
        """``(u, sigma)`` of Poincare points relative to the tube axis."""
        x = hc.poincare_to_hyperboloid(np.asarray(p, dtype=float))
        y = x @ tube.frame_inv.T
        sigma = np.arcsinh(y[..., 2])
        u = np.arcsinh(y[..., 1] / np.cosh(sigma))
        return u, sigma

    def from_fermi(self, tube, u, sigma):
        u, sigma = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(sigma, dtype=float))
        cs = np.cosh(sigma)
        y = np.stack([cs * np.cosh(u), cs * np.sinh(u), np.sinh(sigma)], axis=-1)
        return hc.hyperboloid_to_poincare(y @ tube.frame.T)

    def width(self, tube, u):
        """Half-width W(u); periodic in u with period L."""
        L = self.loop_length
        ur = np.asarray(u, dtype=float) - L * np.round(np.asarray(u, dtype=float) / L)
        cu = np.cosh(np.minimum(np.abs(ur), self.r_B))
        ball = np.arccosh(np.maximum(1.0, math.cosh(self.r_B) / cu))
        return np.maximum(tube.width, ball / (1.0 - self.eta))

    def chart(self, tube, p):
        """``(psi, s)``; ``|s| <= 1`` exactly on the tube."""
        u, sigma = self.fermi(tube, p)
        return u / self.loop_length, sigma / self.width(tube, u)

    def chart_inverse(self, tube, psi, s):
        u = np.asarray(psi, dtype=float) * self.loop_length
        return self.from_fermi(tube, u, np.asarray(s) * self.width(tube, u))

    def in_tube(self, tube, p):
        u, sigma = self.fermi(tube, p)
        return (np.abs(sigma) <= self.width(tube, u)) & (np.abs(u) <= self.half + 1e-9)


def _axis_frame(theta):
    r = hc.rotation(theta).matrix
    return r  # columns: centre, unit tangent towards theta, left normal


def build_finger_system(eta=0.25, widths=(0.08, 0.08), r_B=0.2, poly=None):
    """Tubes around the axes of a1 and a2 with a ball of radius r_B at the centre.

    Raises ``EmbeddingError`` when a widened tube would leave the octagon
    through a side other than the two it runs through, or would touch its
    own other lifts.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    widths = tuple(float(w) for w in widths)
    if len(widths) != 2 or min(widths) <= 0 or r_B <= 0:
        raise ValueError("need two positive widths and a positive ball radius")
    poly = poly or default_octagon()
    L = 2.0 * poly.inradius
    tubes = []
    for i, (letter, w) in enumerate(zip(TUBE_LETTERS, widths)):
        k = letter - 1
        tubes.append(Tube(i, letter, _axis_frame(k * math.pi / 4), w, k, k + 4))
    sys = FingerSystem(tuple(tubes), float(eta), float(r_B), L, poly, smoothstep_profile(eta))
    _check_embedded(sys)
    return sys


def _check_embedded(sys, n=2001):
    poly = sys.polygon
    u = np.linspace(-sys.half, sys.half, n)
    for tube in sys.tubes:
        w = sys.width(tube, u)
        if np.max(w) >= sys.half:
            raise EmbeddingError(f"tube {tube.index + 1}: width exceeds half the loop length")
        for sgn in (1.0, -1.0):
            edge = sys.from_fermi(tube, u, sgn * w)
            vals = poly.side_values(edge)
            for k in range(8):
                if k in (tube.exit_side, tube.entry_side):
                    continue
                bad = np.nonzero(vals[:, k] <= 1e-9)[0]
                if len(bad):
                    j = int(bad[0])
                    raise EmbeddingError(
                        f"tube {tube.index + 1}: boundary segment near u = {u[j]:.4f} "
                        f"meets side {k}"
                    )


# ---------------------------------------------------------------------------
# regions


def region_masks(sys, p):
    """Boolean masks over Poincare points: per-tube membership and supports, ball."""
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    in_t, supp = [], []
    for tube in sys.tubes:
        psi, s = sys.chart(tube, p)
        inside = sys.in_tube(tube, p)
        in_t.append(inside)
        supp.append(inside & (np.abs(s) >= 1.0 - sys.eta))
    x0 = hc.poincare_to_hyperboloid(p)[:, 0]
    ball = x0 <= math.cosh(sys.r_B)
    return {"tube": in_t, "support": supp, "ball": ball}


def _tags(m):
    any_tube = m["tube"][0] | m["tube"][1]
    core = m["ball"] & any_tube
    outside = ~any_tube
    fuzzy = ~outside & ~core
    return outside, core, fuzzy


def region_classify(sys, x):
    p = np.asarray(x.model_coords if isinstance(x, SurfacePoint) else x, dtype=float)
    m = region_masks(sys, p[None])
    outside, core, fuzzy = _tags(m)
    tubes = tuple(i + 1 for i in range(2) if m["tube"][i][0])
    if outside[0]:
        return RegionTag(OUTSIDE)
    if core[0]:
        return RegionTag(CORE, tubes)
    return RegionTag(FUZZY, tubes)


def region_measures(sys, n_samples, seed):
    """Hyperbolic areas of B, the supports, E and the tubes from one sample."""
    pts, nprop = sample_points(seed, n_samples, sys.polygon)
    m = region_masks(sys, pts)
    outside, core, fuzzy = _tags(m)
    sup = m["support"][0] | m["support"][1]
    total = 4.0 * math.pi
    n = len(pts)

    def est(mask):
        q = float(np.mean(mask))
        return MCEstimate(total * q, total * math.sqrt(q * (1 - q) / max(1, n - 1)), n, seed)

    return {
        "B": est(m["ball"]),
        "supports": est(sup),
        "E": est(fuzzy),
        "core": est(core),
        "outside": est(outside),
        "N1": est(m["tube"][0]),
        "N2": est(m["tube"][1]),
        "N1_and_N2": est(m["tube"][0] & m["tube"][1]),
    }


# ---------------------------------------------------------------------------
# pushes


def _push_fermi(sys, tube, u, sigma, t, sign):
    """Fermi coordinates after pushing for time t (sign -1 runs backward)."""
    w0 = sys.width(tube, u)
    s = sigma / w0
    du = sign * t * sys.profile(s) * sys.loop_length
    u1 = u + du
    return u1, s * sys.width(tube, u1), s


def _reduce(sys, u):
    """Bring u into (-L/2, L/2]; returns (u, crossings) with crossings in {-1, 0, 1}."""
    L, h = sys.loop_length, sys.half
    k = np.zeros(np.shape(u), dtype=int)
    k = np.where(u > h, 1, k)
    k = np.where(u <= -h, -1, k)
    return u - k * L, k


def push_letter_many(sys, x, p):
    """Apply the push of one letter to points ``(N, 2)``.

    Returns the new points and a boolean mask of the points whose
    trajectory crossed the side through which the letter's loop leaves
    (forward letters) or enters (inverse letters).
    """
    tube = sys.tube_for_letter(x)
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    out = p.copy()
    crossed = np.zeros(len(p), dtype=bool)
    inside = sys.in_tube(tube, p)
    if not inside.any():
        return out, crossed
    idx = np.nonzero(inside)[0]
    u, sigma = sys.fermi(tube, p[idx])
    u1, sig1, _ = _push_fermi(sys, tube, u, sigma, 1.0, 1 if x > 0 else -1)
    ur, k = _reduce(sys, u1)
    moved = sys.from_fermi(tube, ur, sig1)
    out[idx] = moved
    crossed[idx] = k != 0
    return out, crossed


def push_trajectory(sys, x, p, steps=64, t_range=(0.0, 1.0)):
    """Trajectory of a point under the push of letter ``x`` as a surface path.

    The isotopy is followed in the universal cover along the tube axis and
    then folded into the octagon with crossing annotations.  Points outside
    the tube give a constant path.
    """
    tube = sys.tube_for_letter(x)
    p = np.asarray(p.model_coords if isinstance(p, SurfacePoint) else p, dtype=float)
    if not sys.in_tube(tube, p[None])[0]:
        return SurfacePath.constant(p)
    u, sigma = sys.fermi(tube, p[None])
    t = np.linspace(t_range[0], t_range[1], steps + 1)
    u1, sig1, _ = _push_fermi(sys, tube, u[0], sigma[0], t, 1 if x > 0 else -1)
    cover = sys.from_fermi(tube, u1, sig1)
    cover[0] = p
    return path_from_cover(cover, sys.polygon)


def rho_apply(sys, w, x, steps=64):
    """Endpoint and concatenated trajectory of x under rho(w).

    Letters are applied left to right.
    """
    p = np.asarray(x.model_coords if isinstance(x, SurfacePoint) else x, dtype=float)
    path = SurfacePath.constant(p)
    for letter in w.letters:
        seg = push_trajectory(sys, letter, p, steps)
        new, _ = push_letter_many(sys, letter, p[None])
        p = new[0]
        seg = SurfacePath(np.concatenate([seg.points[:-1], [p]]), seg.crossings)
        path = path.concat(seg, tol=1e-7)
    return SurfacePoint(p, True), path


def rho_apply_many(sys, w, p):
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    masks = []
    for letter in w.letters:
        p, c = push_letter_many(sys, letter, p)
        masks.append(c)
    return p, masks


def gamma(sys, w, x, steps=64):
    """gamma(rho(w), x): the deck word of s_x, the trajectory and s_{rho(w)x} reversed."""
    p = np.asarray(x.model_coords if isinstance(x, SurfacePoint) else x, dtype=float)
    end, traj = rho_apply(sys, w, p, steps)
    loop = system_of_paths(p).concat(traj, tol=1e-7).concat(system_of_paths(end).reversed(), tol=1e-7)
    return lift_path(loop, sys.polygon)


def gamma_many(sys, w, p):
    """gamma(rho(w), x) for many points; the word of crossed letters, reduced."""
    _, masks = rho_apply_many(sys, w, p)
    n = len(np.asarray(p).reshape(-1, 2))
    if not masks:
        return [Word(())] * n
    bits = np.zeros(n, dtype=np.int64)
    for j, m in enumerate(masks):
        bits |= m.astype(np.int64) << j
    cache = {}
    out = []
    for b in bits.tolist():
        if b not in cache:
            cache[b] = Word([x for j, x in enumerate(w.letters) if b >> j & 1])
        out.append(cache[b])
    return out


def area_distortion(sys, n_samples=2000, seed=0, h=1e-6):
    """Hyperbolic Jacobian of rho(a_i) at sampled support points.

    The pushes are not corrected to preserve area; this reports by how much
    they fail to.  Returns per-tube summaries of ``|J - 1|``.
    """
    pts, _ = sample_points(seed, n_samples, sys.polygon)
    m = region_masks(sys, pts)
    out = {}
    for tube in sys.tubes:
        sel = pts[m["support"][tube.index]]
        if not len(sel):
            out[f"tube{tube.index + 1}"] = {"n": 0}
            continue
        base, _ = push_letter_many(sys, tube.letter, sel)
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        fx = (push_letter_many(sys, tube.letter, sel + ex)[0] - push_letter_many(sys, tube.letter, sel - ex)[0]) / (2 * h)
        fy = (push_letter_many(sys, tube.letter, sel + ey)[0] - push_letter_many(sys, tube.letter, sel - ey)[0]) / (2 * h)
        det = fx[:, 0] * fy[:, 1] - fx[:, 1] * fy[:, 0]
        dens = lambda q: 4.0 / (1.0 - np.sum(q * q, axis=1)) ** 2
        jac = det * dens(base) / dens(sel)
        dev = np.abs(jac - 1.0)
        out[f"tube{tube.index + 1}"] = {
            "n": int(len(sel)),
            "mean_abs_dev": float(dev.mean()),
            "max_abs_dev": float(dev.max()),
            "min_jacobian": float(jac.min()),
        }
    return out


# ---------------------------------------------------------------------------
# cocycles and the transfer integral


@dataclass
class CocycleHandle:
    name: str
    arity: int
    fn: Callable
    bound: float
    cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, words):
        key = tuple(words)
        if key not in self.cache:
            self.cache[key] = float(self.fn(key))
        return self.cache[key]


def volume_handle(rep, base=None, tol=1e-8):
    return CocycleHandle("volume", rep.dim + 1, lambda ws: volume_cocycle(rep, ws, base, tol),
                         math.pi if rep.dim == 2 else 1.0149416064096536)


def euler_handle(rep):
    """Homogeneous Euler cocycle of the boundary action, tau(g0^-1 g1, g1^-1 g2)."""
    from .circle_dynamics import MobiusLift, euler_cocycle

    def fn(ws):
        g0, g1, g2 = ws
        a = MobiusLift.from_isometry(evaluate(rep, g0.inverse() * g1))
        b = MobiusLift.from_isometry(evaluate(rep, g1.inverse() * g2))
        return euler_cocycle(a, b)

    return CocycleHandle("euler", 3, fn, 1.0)


def zero_handle(arity=3):
    return CocycleHandle("zero", arity, lambda ws: 0.0, 0.0)


def antisymmetrize(c):
    """Alternating average over permutations of the arguments."""

    def sign(perm):
        s, seen = 1, list(perm)
        for i in range(len(seen)):
            while seen[i] != i:
                j = seen[i]
                seen[i], seen[j] = seen[j], seen[i]
                s = -s
        return s

    perms = [(p, sign(p)) for p in itertools.permutations(range(c.arity))]

    def fn(ws):
        return sum(sg * c(tuple(ws[i] for i in p)) for p, sg in perms) / len(perms)

    return CocycleHandle(f"alt({c.name})", c.arity, fn, c.bound)


@dataclass
class GammaBResult:
    estimate: MCEstimate
    values: np.ndarray = field(repr=False)
    gammas: list = field(repr=False)


def gamma_b_estimate(sys, c, words, n_samples, seed, points=None, details=False):
    """Monte Carlo value of the transfer integral of c on the tuple ``words``.

    ``4 pi * mean_x c(gamma(w_0, x), ..., gamma(w_n, x))`` over points
    sampled by hyperbolic area.  Any failure of c at a sample point is a
    hard error.
    """
    words = tuple(words)
    if len(words) != c.arity:
        raise ValueError(f"cocycle {c.name} takes {c.arity} words, got {len(words)}")
    if points is None:
        points, _ = sample_points(seed, n_samples, sys.polygon)
    n = len(points)
    gams = [gamma_many(sys, w, points) for w in words]
    vals = np.empty(n)
    failed = []
    local = {}
    for j in range(n):
        key = tuple(g[j] for g in gams)
        if key not in local:
            try:
                local[key] = c(key)
            except Exception as exc:  # reported, then fatal
                failed.append((j, repr(exc)))
                local[key] = float("nan")
        vals[j] = local[key]
    if failed:
        raise SampleFailure(f"cocycle {c.name} failed at {len(failed)} sample points, first: {failed[0]}")
    total = 4.0 * math.pi
    v = total * vals
    est = MCEstimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0, n, seed)
    if details:
        return GammaBResult(est, vals, gams)
    return est


def inequality_report(sys, c, tuples, n_samples, seed):
    """Check |Gamma_b(c)(w) - w(B) c(w)| <= (w(S) + w(E)) K + 3 stderr per tuple.

    All quantities come from the same sample, so the deterministic part of
    the bound holds sample by sample: points off the tubes contribute
    c(e, ..., e) = 0, points of B contribute c(w), and the rest at most K.
    """
    pts, _ = sample_points(seed, n_samples, sys.polygon)
    m = region_masks(sys, pts)
    outside, core, fuzzy = _tags(m)
    sup = m["support"][0] | m["support"][1]
    n = len(pts)
    total = 4.0 * math.pi

    def frac(mask):
        q = float(np.mean(mask))
        return total * q, total * math.sqrt(q * (1 - q) / max(1, n - 1))

    wB, seB = frac(m["ball"])
    wS, seS = frac(sup)
    wE, seE = frac(fuzzy)
    K = c.bound
    rows = []
    for ws in tuples:
        ws = tuple(ws)
        res = gamma_b_estimate(sys, c, ws, n, seed, points=pts, details=True)
        cw = c(ws)
        lhs = abs(res.estimate.value - wB * cw)
        combined = math.sqrt(res.estimate.stderr ** 2 + (cw * seB) ** 2 + (K * seS) ** 2 + (K * seE) ** 2)
        rhs = (wS + wE) * K + 3.0 * combined
        # region-table agreement on this sample
        mism = 0
        for g, w in zip(res.gammas, ws):
            garr = np.array([x == Word(()) for x in g])
            mism += int(np.sum(outside & ~garr))
            warr = np.array([x == w for x in g])
            mism += int(np.sum(core & ~warr))
        rows.append({
            "words": [sys.polygon.rep.format(w) for w in ws],
            "gamma_b": res.estimate.value,
            "gamma_b_stderr": res.estimate.stderr,
            "c_w": cw,
            "lambda_c_w": wB * cw,
            "lhs": lhs,
            "envelope": (wS + wE) * K,
            "rhs": rhs,
            "combined_stderr": combined,
            "table_mismatches": mism,
            "pass": bool(lhs <= rhs),
        })
    return {
        "cocycle": c.name,
        "K": K,
        "n": n,
        "seed": seed,
        "omega_B": wB,
        "omega_supports": wS,
        "omega_E": wE,
        "stderr_B": seB,
        "stderr_supports": seS,
        "stderr_E": seE,
        "envelope": (wS + wE) * K,
        "rows": rows,
        "all_pass": all(r["pass"] for r in rows),
    }
