"""Signed volumes of geodesic simplices in H^2 and H^3.

Orientation: the sign of ``det(k_1 - k_0, ..., k_n - k_0)`` in Klein
coordinates, so a counterclockwise triangle is positive.  Degenerate
simplices have volume exactly 0.

Areas use the angle defect.  Volumes integrate the Klein density
``(1 - |x|^2)^-2`` over the Euclidean tetrahedron (geodesics are straight
in the Klein model) with a degree-7 Grundmann-Moller rule and adaptive red
refinement; the error of a cell is estimated by comparing the rule on the
cell with the rule summed over its eight children.  Every cell is
integrated in the Klein chart centred at its own hyperbolic centroid, so
vertices close to the sphere cost refinement by hyperbolic size only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from . import hyp_core as hc
from .hyp_core import KleinPoint

__all__ = [
    "GeodesicSimplex",
    "QuadratureError",
    "QuadratureResult",
    "MAX_KLEIN_RADIUS",
    "V3_MAX",
    "vertex_angle",
    "orientation",
    "signed_area_2d",
    "signed_area_centred",
    "signed_volume_3d",
    "volume_3d_detailed",
    "signed_volume",
    "coboundary_residual",
    "grundmann_moller",
    "integrate_tetrahedron",
    "integrate_geodesic_tetrahedron",
    "red_refine",
]

MAX_KLEIN_RADIUS = 1.0 - 1e-10
V3_MAX = 1.0149416064096536  # volume of the regular ideal tetrahedron


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of budget; carries the partial estimate."""

    def __init__(self, msg, estimate, error):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class GeodesicSimplex:
    vertices: tuple

    def __post_init__(self):
        vs = tuple(v if isinstance(v, KleinPoint) else KleinPoint(np.asarray(v, dtype=float))
                   for v in self.vertices)
        if not vs:
            raise ValueError("empty simplex")
        n = vs[0].dim
        if len(vs) != n + 1:
            raise ValueError(f"a {n}-simplex needs {n + 1} vertices, got {len(vs)}")
        for v in vs:
            if v.dim != n:
                raise hc.DimensionError("vertices of mixed dimension")
            if float(v.coords @ v.coords) > MAX_KLEIN_RADIUS ** 2:
                raise ValueError("vertex too close to the sphere at infinity")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self):
        return self.vertices[0].dim

    def klein(self):
        return np.array([v.coords for v in self.vertices])


def orientation(k):
    """Sign of the edge-vector determinant of Klein vertices ``k`` (rows)."""
    k = np.asarray(k, dtype=float)
    e = k[1:] - k[0]
    if any(np.array_equal(k[i], k[j]) for i in range(len(k)) for j in range(i)):
        return 0
    d = np.linalg.det(e)
    return int(np.sign(d))


def vertex_angle(a, b, c):
    """Angle at hyperboloid point a between the geodesics towards b and c."""
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    u = b + hc.minkowski(a, b) * a
    v = c + hc.minkowski(a, c) * a
    uv = hc.minkowski(u, v)
    cross = abs(np.linalg.det(np.array([a, u, v])))
    return math.atan2(cross, uv)


def signed_area_2d(s):
    if s.dim != 2:
        raise hc.DimensionError("signed_area_2d needs a triangle in H^2")
    k = s.klein()
    sgn = orientation(k)
    if sgn == 0:
        return 0.0
    x = [v.hyperboloid() for v in s.vertices]
    a = vertex_angle(x[0], x[1], x[2])
    b = vertex_angle(x[1], x[2], x[0])
    c = vertex_angle(x[2], x[0], x[1])
    return sgn * max(0.0, math.pi - (a + b + c))


def signed_area_centred(views):
    """Signed area of a triangle given from the viewpoint of each vertex.

    ``views[i]`` holds the hyperboloid vectors of vertices i + 1 and i + 2
    after an isometry has moved vertex i to the origin.  The angle at the
    origin only needs the spatial parts, which stay accurate for vertices
    far beyond the reach of Klein coordinates.
    """
    angles = []
    for y, z in views:
        u, v = np.asarray(y, dtype=float)[1:], np.asarray(z, dtype=float)[1:]
        angles.append(math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v)))
    u, v = np.asarray(views[0][0])[1:], np.asarray(views[0][1])[1:]
    cross = u[0] * v[1] - u[1] * v[0]
    if cross == 0.0:
        return 0.0
    return math.copysign(max(0.0, math.pi - sum(angles)), cross)


# ---------------------------------------------------------------------------
# quadrature on simplices


def _compositions(total, parts):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    for bars in combinations_with_replacement(range(parts), total):
        out = [0] * parts
        for b in bars:
            out[b] += 1
        yield tuple(out)


def grundmann_moller(n, s):
    """Barycentric points and weights of the Grundmann-Moller rule.

    Degree ``2s + 1`` on the n-simplex; weights sum to 1, so the integral is
    ``volume * sum(w * f(points))``.  Some weights are negative.
    """
    d = 2 * s + 1
    pts, wts = [], []
    for i in range(s + 1):
        denom = d + n - 2 * i
        w = (-1) ** i * 2.0 ** (-2 * s) * denom ** d / (math.factorial(i) * math.factorial(d + n - i))
        w *= math.factorial(n)
        for beta in _compositions(s - i, n + 1):
            pts.append([(2 * b + 1) / denom for b in beta])
            wts.append(w)
    return np.array(pts), np.array(wts)


_GM_POINTS, _GM_WEIGHTS = grundmann_moller(3, 3)

# red refinement of a tetrahedron: corners then the inner octahedron cut
# along the diagonal m02-m13
_EDGE = {(0, 1): 4, (0, 2): 5, (0, 3): 6, (1, 2): 7, (1, 3): 8, (2, 3): 9}
_CHILDREN = np.array([
    [0, 4, 5, 6],
    [4, 1, 7, 8],
    [5, 7, 2, 9],
    [6, 8, 9, 3],
    [4, 5, 6, 8],
    [4, 5, 7, 8],
    [5, 6, 8, 9],
    [5, 7, 8, 9],
])


def red_refine(cells):
    """Split tetrahedra ``(N, 4, 3)`` into ``(8N, 4, 3)`` children of equal volume."""
    cells = np.asarray(cells)
    mids = [0.5 * (cells[:, i] + cells[:, j]) for (i, j) in _EDGE]
    nodes = np.concatenate([cells, np.stack(mids, axis=1)], axis=1)  # (N, 10, 3)
    return nodes[:, _CHILDREN].reshape(-1, 4, 3)


def _klein_density(x):
    return (1.0 - np.sum(x * x, axis=-1)) ** -2


def _rule(cells, density):
    vol = np.abs(np.linalg.det(cells[:, 1:] - cells[:, :1])) / 6.0
    x = np.einsum("pk,nkd->npd", _GM_POINTS, cells)
    return vol * (density(x) @ _GM_WEIGHTS)


def _cell_estimates(cells, density):
    """Rule value, children sum and error for each cell."""
    kids = red_refine(cells)
    q_kids = _rule(kids, density).reshape(-1, 8)
    q = _rule(cells, density)
    fine = q_kids.sum(axis=1)
    return fine, np.abs(fine - q), kids.reshape(-1, 8, 4, 3)


_J3 = np.diag([-1.0, 1.0, 1.0, 1.0])


def _centring_boosts(c):
    """Boosts ``(N, 4, 4)`` taking the hyperboloid points ``c`` to the origin."""
    a = c.copy()
    a[:, 0] += 1.0
    t = np.einsum("ni,nj->nij", a, a @ _J3) / (1.0 + c[:, :1, None])
    t[:, 0, :] -= 2.0 * (c @ _J3)
    return t + np.eye(4)


def _hyperbolic_estimates(cells):
    """Like ``_cell_estimates`` for geodesic cells given by hyperboloid vertices.

    Each cell (and each child) is integrated in the Klein chart that puts
    its hyperbolic centroid at the origin, where the density is close to 1.
    Isometries map straight cells to straight cells, so red refinement in
    the cell's chart is a partition of the geodesic cell.
    """
    def charts(x):
        c = x.sum(axis=1)
        c /= np.sqrt(c[:, 0] ** 2 - np.sum(c[:, 1:] ** 2, axis=1))[:, None]
        t = _centring_boosts(c)
        y = np.einsum("nij,nkj->nki", t, x)
        return t, y[..., 1:] / y[..., :1]

    t, k = charts(cells)
    q = _rule(k, _klein_density)
    kk = red_refine(k).reshape(-1, 8, 4, 3)
    y = np.concatenate([np.ones(kk.shape[:-1] + (1,)), kk], axis=-1)
    y /= np.sqrt(1.0 - np.sum(kk * kk, axis=-1))[..., None]
    t_inv = np.einsum("ij,nkj,kl->nil", _J3, t, _J3)  # J T^T J
    kids = np.einsum("nij,nckj->ncki", t_inv, y)
    _, kid_k = charts(kids.reshape(-1, 4, 4))
    fine = _rule(kid_k, _klein_density).reshape(-1, 8).sum(axis=1)
    return fine, np.abs(fine - q), kids


@dataclass
class QuadratureResult:
    value: float
    error: float
    cells: int
    rounds: int


def _adaptive(cells, estimates, tol, max_cells, max_rounds):
    est, err, kids = estimates(cells)
    done_value = 0.0
    done_error = 0.0
    rounds = 0
    while True:
        total_err = done_error + float(np.sum(err))
        total = done_value + float(np.sum(est))
        if total_err <= tol:
            return QuadratureResult(total, total_err, len(est), rounds)
        if rounds >= max_rounds or 8 * len(est) > max_cells:
            raise QuadratureError(
                f"quadrature budget exhausted: estimate {total:.12g}, error bound {total_err:.3g} > tol {tol:.3g}",
                total,
                total_err,
            )
        rounds += 1
        # refine the largest-error cells that together hold half the error
        order = np.argsort(-err, kind="stable")
        cum = np.cumsum(err[order])
        cut = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        pick = np.sort(order[:cut])
        keep = np.ones(len(est), dtype=bool)
        keep[pick] = False
        # cells far below the tolerance scale are frozen to keep the active set small
        tiny = keep & (err < 1e-3 * tol / max(1, len(est)))
        done_value += float(np.sum(est[tiny]))
        done_error += float(np.sum(err[tiny]))
        keep &= ~tiny
        new = kids[pick].reshape((-1,) + kids.shape[2:])
        n_est, n_err, n_kids = estimates(new)
        est = np.concatenate([est[keep], n_est])
        err = np.concatenate([err[keep], n_err])
        kids = np.concatenate([kids[keep], n_kids])


def integrate_tetrahedron(verts, tol, density=_klein_density, max_cells=2_000_000, max_rounds=200):
    """Adaptive integral of ``density`` over a Euclidean tetrahedron ``(4, 3)``."""
    cells = np.asarray(verts, dtype=float)[None]
    return _adaptive(cells, lambda c: _cell_estimates(c, density), tol, max_cells, max_rounds)


def integrate_geodesic_tetrahedron(x, tol, max_cells=2_000_000, max_rounds=200):
    """Hyperbolic volume of the geodesic tetrahedron on hyperboloid vertices ``(4, 4)``."""
    cells = np.asarray(x, dtype=float)[None]
    return _adaptive(cells, _hyperbolic_estimates, tol, max_cells, max_rounds)


def volume_3d_detailed(s, tol=1e-8, max_cells=2_000_000):
    if s.dim != 3:
        raise hc.DimensionError("signed_volume_3d needs a tetrahedron in H^3")
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = s.klein()
    sgn = orientation(k)
    if sgn == 0 or abs(np.linalg.det(k[1:] - k[0])) < 1e-300:
        return QuadratureResult(0.0, 0.0, 0, 0)
    x = np.array([v.hyperboloid() for v in s.vertices])
    res = integrate_geodesic_tetrahedron(x, tol, max_cells=max_cells)
    return QuadratureResult(sgn * res.value, res.error, res.cells, res.rounds)


def signed_volume_3d(s, tol=1e-8):
    return volume_3d_detailed(s, tol).value


def signed_volume(s, tol=1e-8):
    return signed_area_2d(s) if s.dim == 2 else signed_volume_3d(s, tol)


def coboundary_residual(points, dim=None, tol=1e-8):
    """``|sum_j (-1)^j vol(points without j)|`` for n + 2 points."""
    pts = [p if isinstance(p, KleinPoint) else KleinPoint(np.asarray(p, dtype=float)) for p in points]
    dim = dim or pts[0].dim
    if len(pts) != dim + 2:
        raise ValueError(f"need {dim + 2} points in dimension {dim}")
    total = 0.0
    for j in range(dim + 2):
        face = pts[:j] + pts[j + 1:]
        total += (-1) ** j * signed_volume(GeodesicSimplex(face), tol)
    return abs(total)
