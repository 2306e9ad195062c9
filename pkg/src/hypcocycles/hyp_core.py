"""Hyperbolic plane and space as the upper sheet of the hyperboloid.

Points live on ``{X : <X, X> = -1, X_0 > 0}`` with the Lorentz form
``<X, Y> = -X_0 Y_0 + X_1 Y_1 + ... + X_n Y_n``.  Isometries are
``SO+(n, 1)`` matrices acting on the left of column vectors, and
``compose(g, h)`` is the matrix product ``g @ h``, so that
``apply(compose(g, h), p) == apply(g, apply(h, p))``.

Chart conventions used throughout the package:

* Klein coordinates ``k = X[1:] / X[0]`` (geodesics are straight chords).
* Poincare coordinates ``p = X[1:] / (1 + X[0])``.
* The positive orientation is that of the Klein coordinate chart.
* In dimension 2 the boundary circle point at angle ``theta`` is the null
  ray through ``(1, cos theta, sin theta)``; circle coordinates are
  ``theta / 2 pi``.
* In dimension 3 the sphere at infinity is identified with the Riemann
  sphere by ``zeta = (x + i y) / (t - z)`` for a null vector ``(t, x, y, z)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DimensionError",
    "KleinPoint",
    "Isometry",
    "Mat2",
    "minkowski",
    "lorentz_form",
    "renormalize_lorentz",
    "lorentz_residual",
    "klein_to_hyperboloid",
    "hyperboloid_to_klein",
    "poincare_to_hyperboloid",
    "hyperboloid_to_poincare",
    "poincare_to_klein",
    "klein_to_poincare",
    "identity",
    "rotation",
    "boost",
    "translation",
    "compose",
    "inverse",
    "apply",
    "hyp_distance",
    "from_sl2_real",
    "from_sl2_complex",
    "sl2_mobius",
    "boundary_circle_map",
    "RENORMALIZE_EVERY",
]

# Long products are re-orthonormalized after this many factors.
RENORMALIZE_EVERY = 32
_LORENTZ_TOL = 1e-12


class DimensionError(ValueError):
    pass


def lorentz_form(n):
    j = np.eye(n + 1)
    j[0, 0] = -1.0
    return j


def minkowski(x, y):
    """Lorentz inner product along the last axis (broadcasts)."""
    x = np.asarray(x)
    y = np.asarray(y)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def lorentz_residual(g):
    g = np.asarray(g, dtype=float)
    j = lorentz_form(g.shape[0] - 1)
    return float(np.max(np.abs(g.T @ j @ g - j)))


def renormalize_lorentz(g):
    """Gram-Schmidt in the Lorentz form, column by column.

    Column 0 is rescaled to a unit timelike vector with positive time
    component; the remaining columns are made orthonormal to it and to each
    other.  Returns a matrix with ``G^T J G = J`` to rounding.
    """
    g = np.array(g, dtype=float)
    n1 = g.shape[0]
    cols = []
    c0 = g[:, 0].copy()
    norm = -minkowski(c0, c0)
    if norm <= 0:
        raise ValueError("first column is not timelike")
    c0 /= math.sqrt(norm)
    if c0[0] < 0:
        c0 = -c0
    cols.append(c0)
    for k in range(1, n1):
        v = g[:, k].copy()
        for i, c in enumerate(cols):
            sign = -1.0 if i == 0 else 1.0
            v -= sign * minkowski(v, c) * c
        # second pass for stability
        for i, c in enumerate(cols):
            sign = -1.0 if i == 0 else 1.0
            v -= sign * minkowski(v, c) * c
        nv = minkowski(v, v)
        if nv <= 0:
            raise ValueError("column is not spacelike after orthogonalization")
        cols.append(v / math.sqrt(nv))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# chart conversions (vectorized over leading axes)


def klein_to_hyperboloid(k):
    k = np.asarray(k, dtype=float)
    r2 = np.sum(k * k, axis=-1)
    if np.any(r2 >= 1.0):
        raise ValueError("Klein point outside the open unit ball")
    x0 = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([x0[..., None], k * x0[..., None]], axis=-1)


def hyperboloid_to_klein(x):
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / x[..., :1]


def poincare_to_hyperboloid(p):
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    denom = 1.0 - r2
    x0 = (1.0 + r2) / denom
    return np.concatenate([x0[..., None], 2.0 * p / denom[..., None]], axis=-1)


def hyperboloid_to_poincare(x):
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def poincare_to_klein(p):
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1, keepdims=True)
    return 2.0 * p / (1.0 + r2)


def klein_to_poincare(k):
    k = np.asarray(k, dtype=float)
    r2 = np.sum(k * k, axis=-1, keepdims=True)
    return k / (1.0 + np.sqrt(1.0 - r2))


# ---------------------------------------------------------------------------
# value types


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KleinPoint:
    """An interior point of the Klein ball (n = 2 or 3)."""

    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.ndim != 1 or c.shape[0] not in (2, 3):
            raise DimensionError(f"Klein point must have 2 or 3 coordinates, got shape {c.shape}")
        if float(c @ c) >= 1.0:
            raise ValueError(f"Klein point {c.tolist()} is not inside the unit ball")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return self.coords.shape[0]

    @classmethod
    def origin(cls, dim=2):
        return cls(np.zeros(dim))

    @classmethod
    def from_hyperboloid(cls, x):
        return cls(hyperboloid_to_klein(x))

    @classmethod
    def from_poincare(cls, p):
        return cls(poincare_to_klein(p))

    def hyperboloid(self):
        return klein_to_hyperboloid(self.coords)

    def poincare(self):
        return klein_to_poincare(self.coords)

    def __eq__(self, other):
        return isinstance(other, KleinPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"KleinPoint({self.coords.tolist()})"


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry of H^n stored as an SO+(n,1) matrix."""

    matrix: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (3, 4):
            raise DimensionError(f"expected a 3x3 or 4x4 Lorentz matrix, got shape {m.shape}")
        n = m.shape[0] - 1
        if self.dim not in (0, n):
            raise DimensionError(f"dim={self.dim} does not match a {m.shape} matrix")
        scale = max(1.0, float(np.max(np.abs(m)))) ** 2
        if lorentz_residual(m) > 1e-8 * scale:
            raise ValueError("matrix does not preserve the Lorentz form")
        if m[0, 0] <= 0:
            raise ValueError("matrix swaps the hyperboloid sheets")
        # det of the spatial block has the sign of det(m) and suffers less
        # cancellation; past ~1e7 even that is rounding noise and the
        # constructors (products of SL(2) lifts) are trusted instead
        if np.max(np.abs(m)) < 1e7 and np.linalg.det(m[1:, 1:]) <= 0:
            raise ValueError("matrix reverses orientation")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", n)

    def __matmul__(self, other):
        return compose(self, other)

    def __call__(self, p):
        return apply(self, p)

    def inverse(self):
        return inverse(self)

    def renormalized(self):
        return Isometry(renormalize_lorentz(self.matrix))

    def residual(self):
        return lorentz_residual(self.matrix)

    def close_to(self, other, tol=1e-9):
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= tol)

    def __repr__(self):
        return f"Isometry(dim={self.dim}, matrix={self.matrix.tolist()})"


class Mat2:
    """A 2x2 real or complex matrix scaled to determinant 1.

    The scaling uses the principal square root of the determinant, so ``m``
    and ``-m`` give the same projective class but are stored as given.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=complex)
        if a.shape != (2, 2):
            raise ValueError(f"Mat2 needs a 2x2 array, got shape {a.shape}")
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        if abs(det) < 1e-14 * max(1.0, float(np.max(np.abs(a)))) ** 2:
            raise ValueError("singular matrix")
        a = a / cmath.sqrt(det)
        if np.all(np.abs(a.imag) <= 1e-15 * max(1.0, float(np.max(np.abs(a))))):
            a = a.real.astype(complex)
        a.setflags(write=False)
        self.entries = a

    @classmethod
    def unit(cls, entries):
        """Wrap a product of determinant-one matrices without rescaling.

        For long products the computed determinant is dominated by rounding
        (of order eps * max|entry|^2), so it can neither be checked nor
        divided out.
        """
        a = np.array(entries, dtype=complex)
        if np.all(a.imag == 0):
            a = a.real.astype(complex)
        a.setflags(write=False)
        m = cls.__new__(cls)
        m.entries = a
        return m

    @property
    def is_real(self):
        return bool(np.all(self.entries.imag == 0))

    @property
    def det(self):
        a = self.entries
        return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])

    @property
    def trace(self):
        return complex(self.entries[0, 0] + self.entries[1, 1])

    def __matmul__(self, other):
        return Mat2.unit(self.entries @ other.entries)

    def inverse(self):
        a = self.entries
        return Mat2.unit([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])

    def __neg__(self):
        m = Mat2.__new__(Mat2)
        e = -self.entries
        e.setflags(write=False)
        m.entries = e
        return m

    def __call__(self, z):
        return sl2_mobius(self, z)

    def __repr__(self):
        return f"Mat2({self.entries.tolist()})"


# ---------------------------------------------------------------------------
# constructors and group operations


def identity(dim=2):
    return Isometry(np.eye(dim + 1))


def rotation(theta, dim=2, plane=(1, 2)):
    """Elliptic rotation about the origin by angle theta in the given plane."""
    m = np.eye(dim + 1)
    i, j = plane
    c, s = math.cos(theta), math.sin(theta)
    m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
    return Isometry(m)


def boost(t, dim=2, axis=1):
    """Hyperbolic translation of length t along coordinate axis ``axis``."""
    m = np.eye(dim + 1)
    c, s = math.cosh(t), math.sinh(t)
    m[0, 0], m[0, axis], m[axis, 0], m[axis, axis] = c, s, s, c
    return Isometry(m)


def translation(theta, t):
    """Translation of H^2 by distance t along the diameter at angle theta."""
    r = rotation(theta)
    return Isometry(r.matrix @ boost(t).matrix @ r.matrix.T)


def compose(g, h):
    if g.dim != h.dim:
        raise DimensionError(f"cannot compose isometries of dims {g.dim} and {h.dim}")
    return Isometry(g.matrix @ h.matrix)


def inverse(g):
    j = lorentz_form(g.dim)
    return Isometry(j @ g.matrix.T @ j)


def apply(iso, p):
    if iso.dim != p.dim:
        raise DimensionError(f"isometry of dim {iso.dim} applied to a point of dim {p.dim}")
    return KleinPoint.from_hyperboloid(iso.matrix @ p.hyperboloid())


def hyp_distance(p, q):
    """Hyperbolic distance between two Klein points."""
    if p.dim != q.dim:
        raise DimensionError("points of different dimension")
    x, y = p.hyperboloid(), q.hyperboloid()
    # arcsinh of the half chord is accurate for nearby points, unlike arccosh
    d = x - y
    half_chord = 0.5 * math.sqrt(max(float(minkowski(d, d)), 0.0))
    return 2.0 * math.asinh(half_chord)


# ---------------------------------------------------------------------------
# PSL(2, R) and PSL(2, C)

_CAYLEY = np.array([[1.0, -1j], [1.0, 1j]])  # z -> (z - i)/(z + i)
_CAYLEY_INV = np.array([[1j, 1j], [-1.0, 1.0]]) / (2j)


def sl2_mobius(m, z):
    a = m.entries
    if z == complex("inf") or (isinstance(z, complex) and cmath.isinf(z)):
        return a[0, 0] / a[1, 0] if a[1, 0] != 0 else complex("inf")
    den = a[1, 0] * z + a[1, 1]
    if den == 0:
        return complex("inf")
    return (a[0, 0] * z + a[0, 1]) / den


def from_sl2_real(m):
    """PSL(2,R) acting on the upper half-plane -> SO+(2,1).

    The half-plane is carried to the Poincare disk by the Cayley map
    ``z -> (z - i)/(z + i)``, giving ``u`` in SU(1,1).  SU(1,1) preserves
    the slice ``z = 0`` of the Hermitian model used by ``from_sl2_complex``,
    and the (t, x, y) block of that action is the isometry of the disk.
    The entries are quadratic in ``u``, so products of long words stay
    accurate; ``m`` and ``-m`` give the same isometry.
    """
    if not isinstance(m, Mat2):
        m = Mat2(m)
    if not m.is_real:
        # a negative determinant also lands here: its square root is imaginary
        raise ValueError("from_sl2_real needs a real matrix of positive determinant")
    u = _CAYLEY @ m.entries @ _CAYLEY_INV
    cols = [_hermitian_coords(u @ p @ u.conj().T)[:3] for p in _PAULI[:3]]
    return Isometry(np.column_stack(cols))


_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def _hermitian_coords(h):
    t = 0.5 * (h[0, 0] + h[1, 1]).real
    z = 0.5 * (h[0, 0] - h[1, 1]).real
    return np.array([t, h[0, 1].real, h[0, 1].imag, z])


def from_sl2_complex(m):
    """PSL(2,C) -> SO+(3,1) via ``H -> A H A^*`` on Hermitian matrices.

    ``(t, x, y, z)`` corresponds to ``[[t + z, x + iy], [x - iy, t - z]]``;
    the induced action on the sphere at infinity is the Mobius action of
    ``m`` on ``zeta = (x + iy)/(t - z)``.
    """
    if not isinstance(m, Mat2):
        m = Mat2(m)
    a = m.entries
    cols = [_hermitian_coords(a @ p @ a.conj().T) for p in _PAULI]
    return Isometry(np.column_stack(cols))


def boundary_circle_map(iso):
    """Normalized lift of the boundary action of a planar isometry."""
    from .circle_dynamics import MobiusLift

    if iso.dim != 2:
        raise DimensionError("boundary_circle_map needs a planar isometry")
    return MobiusLift.from_isometry(iso).normalized()
