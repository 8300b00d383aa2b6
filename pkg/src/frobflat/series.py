"""Truncated multivariate power series over C.

A :class:`PowerSeries` stores Taylor coefficients ``a_alpha`` in a dict
keyed by exponent tuples (multi-indices), truncated to total degree
``dmax``.  Value semantics: ``f(t) = sum_alpha a_alpha t^alpha``.

Conventions
-----------
* Coefficients with magnitude below :data:`PRUNE_TOL` are dropped after
  every operation (sparsity).
* Arithmetic silently truncates back to ``dmax``; ``mul`` can report the
  magnitude of the largest dropped coefficient on request.
* Series are immutable by convention: no public operation mutates its
  inputs, and instances may be shared freely across threads.

Variable layout used throughout the package: for a geometry with ``r``
real directions and ``n`` complex directions the dimension is
``d = r + 2n`` with variables ``(t_1..t_r, x_1..x_n, x_{n+1}..x_{2n})``
and complex coordinates ``z_j = x_j + i x_{j+n}``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import PreconditionError, ShapeError, SingularityError

PRUNE_TOL = 1e-14


def _check_index(alpha, dim):
    if len(alpha) != dim:
        raise ShapeError(f"multi-index length {len(alpha)} != dimension {dim}")
    if any(a < 0 for a in alpha):
        raise ShapeError(f"negative exponent in multi-index {alpha}")


class PowerSeries:
    """Truncated Taylor series ``f(t) = sum a_alpha t^alpha``, |alpha| <= dmax."""

    __slots__ = ("dim", "dmax", "coeffs")

    def __init__(self, dim, dmax, coeffs=None):
        if dim < 0 or dmax < 0:
            raise ShapeError("dimension and degree cap must be non-negative")
        self.dim = int(dim)
        self.dmax = int(dmax)
        cleaned = {}
        if coeffs:
            for alpha, c in coeffs.items():
                alpha = tuple(int(a) for a in alpha)
                _check_index(alpha, self.dim)
                c = complex(c)
                if sum(alpha) <= self.dmax and abs(c) > PRUNE_TOL:
                    cleaned[alpha] = c
        self.coeffs = cleaned

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @staticmethod
    def zero(dim, dmax):
        return PowerSeries(dim, dmax)

    @staticmethod
    def constant(dim, dmax, value):
        return PowerSeries(dim, dmax, {(0,) * dim: value})

    @staticmethod
    def variable(dim, dmax, i, coeff=1.0):
        """The series ``coeff * t_i`` (0-based variable index)."""
        alpha = tuple(1 if k == i else 0 for k in range(dim))
        return PowerSeries(dim, dmax, {alpha: coeff})

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------
    def __repr__(self):
        return f"PowerSeries(dim={self.dim}, dmax={self.dmax}, nterms={len(self.coeffs)})"

    def degree(self):
        """Largest total degree with a stored coefficient (-1 for the zero series)."""
        return max((sum(a) for a in self.coeffs), default=-1)

    def at_zero(self):
        return self.coeffs.get((0,) * self.dim, 0.0 + 0.0j)

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for c in self.coeffs.values())

    def coefficient(self, alpha):
        return self.coeffs.get(tuple(alpha), 0.0 + 0.0j)

    def linear_part(self):
        """Gradient at 0 as a complex vector of length ``dim``."""
        g = np.zeros(self.dim, dtype=complex)
        for i in range(self.dim):
            alpha = tuple(1 if k == i else 0 for k in range(self.dim))
            g[i] = self.coeffs.get(alpha, 0.0)
        return g

    def with_cap(self, dmax):
        """Copy with a new degree cap (terms above it are dropped)."""
        if dmax == self.dmax:
            return self
        return PowerSeries(self.dim, dmax, self.coeffs)

    def conjugate(self):
        """Coefficient-wise conjugate: the series of conj(f) on the real slice."""
        return PowerSeries(self.dim, self.dmax, {a: c.conjugate() for a, c in self.coeffs.items()})

    # ------------------------------------------------------------------
    # ring operations
    # ------------------------------------------------------------------
    def _check_match(self, other):
        if self.dim != other.dim:
            raise ShapeError(f"dimension mismatch: {self.dim} != {other.dim}")
        if self.dmax != other.dmax:
            raise ShapeError(f"degree cap mismatch: {self.dmax} != {other.dmax}")

    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            other = PowerSeries.constant(self.dim, self.dmax, other)
        self._check_match(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0.0) + c
        return PowerSeries(self.dim, self.dmax, out)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(self.dim, self.dmax, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, PowerSeries):
            other = PowerSeries.constant(self.dim, self.dmax, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Scalar multiple ``c*f``."""
        c = complex(c)
        return PowerSeries(self.dim, self.dmax, {a: c * v for a, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return self.scale(other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.scale(other)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def evaluate(self, point):
        """Evaluate at a single point (array-like of length dim)."""
        p = np.asarray(point, dtype=complex)
        if p.shape != (self.dim,):
            raise ShapeError(f"point shape {p.shape} != ({self.dim},)")
        total = 0.0 + 0.0j
        for alpha, c in self.coeffs.items():
            term = c
            for x, a in zip(p, alpha):
                if a:
                    term *= x**a
            total += term
        return total

    def evaluate_many(self, points):
        """Vectorized evaluation at an (N, dim) array of points."""
        pts = np.asarray(points, dtype=complex)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ShapeError(f"points shape {pts.shape} incompatible with dim {self.dim}")
        out = np.zeros(pts.shape[0], dtype=complex)
        for alpha, c in self.coeffs.items():
            term = np.full(pts.shape[0], c, dtype=complex)
            for i, a in enumerate(alpha):
                if a:
                    term *= pts[:, i] ** a
            out += term
        return out


# ----------------------------------------------------------------------
# free-function operations
# ----------------------------------------------------------------------

def mul(f, g, return_dropped=False):
    """Truncated Cauchy product of two series.

    Parameters
    ----------
    f, g : PowerSeries with equal dimension and degree cap.
    return_dropped : bool
        When True also return the magnitude of the largest coefficient
        that fell above the degree cap (truncation diagnostic).
    """
    f._check_match(g)
    out = {}
    dropped = 0.0
    dmax = f.dmax
    for a1, c1 in f.coeffs.items():
        d1 = sum(a1)
        for a2, c2 in g.coeffs.items():
            if d1 + sum(a2) > dmax:
                dropped = max(dropped, abs(c1 * c2))
                continue
            key = tuple(x + y for x, y in zip(a1, a2))
            out[key] = out.get(key, 0.0) + c1 * c2
    prod = PowerSeries(f.dim, dmax, out)
    if return_dropped:
        return prod, dropped
    return prod


def differentiate(f, var, keep_cap=False):
    """Formal partial derivative in variable ``var``.

    The degree cap drops by one (the top-degree coefficients of the
    derivative of a truncation are unknowable).  Internal callers that
    manipulate exact polynomials pass ``keep_cap=True``.
    """
    if not 0 <= var < f.dim:
        raise ShapeError(f"variable index {var} out of range for dim {f.dim}")
    out = {}
    for alpha, c in f.coeffs.items():
        a = alpha[var]
        if a == 0:
            continue
        key = alpha[:var] + (a - 1,) + alpha[var + 1:]
        out[key] = out.get(key, 0.0) + a * c
    cap = f.dmax if keep_cap else max(f.dmax - 1, 0)
    return PowerSeries(f.dim, cap, out)


def wirtinger(f, j, kind, r, n, keep_cap=False):
    """Wirtinger derivative d_z / d_zbar in the complex coordinate ``z_j``.

    With variables laid out as (t_1..t_r, x_1..x_n, x_{n+1}..x_{2n}) and
    z_j = x_j + i x_{j+n}:

    * ``kind='d_z'``:    (1/2)(d/dx_j - i d/dx_{j+n})
    * ``kind='d_zbar'``: (1/2)(d/dx_j + i d/dx_{j+n})
    """
    if f.dim != r + 2 * n:
        raise ShapeError(f"series dim {f.dim} != r+2n = {r + 2 * n}")
    if not 0 <= j < n:
        raise ShapeError(f"complex index {j} out of range for n={n}")
    if kind not in ("d_z", "d_zbar"):
        raise ShapeError(f"unknown Wirtinger kind {kind!r}")
    sgn = -1j if kind == "d_z" else 1j
    fx = differentiate(f, r + j, keep_cap=keep_cap)
    fy = differentiate(f, r + n + j, keep_cap=keep_cap)
    return (fx + fy.scale(sgn)).scale(0.5)


def compose(f, g, allow_recenter=False):
    """Truncated composition ``f(g(.))`` for a SeriesMap ``g``.

    ``g`` must have as many components as ``f`` has variables, and every
    component must vanish at 0 unless ``allow_recenter`` is set (in which
    case the result is the exact polynomial composition truncated to the
    cap, which is only a faithful re-centering when ``f`` is an exact
    polynomial).
    """
    if g.d_out != f.dim:
        raise ShapeError(f"map output dim {g.d_out} != series dim {f.dim}")
    if not allow_recenter:
        for comp in g.components:
            if abs(comp.at_zero()) > PRUNE_TOL:
                raise PreconditionError(
                    "composition target does not vanish at 0 (pass allow_recenter=True "
                    "only for exact polynomial re-centering)"
                )
    dmax = min(f.dmax, g.dmax)
    din = g.d_in
    one = PowerSeries.constant(din, dmax, 1.0)
    # cache powers of each component
    powcache = [[one] for _ in range(g.d_out)]
    maxdeg = [max((a[i] for a in f.coeffs), default=0) for i in range(f.dim)]
    for i in range(g.d_out):
        gi = g.components[i].with_cap(dmax)
        for _ in range(maxdeg[i]):
            powcache[i].append(mul(powcache[i][-1], gi))
    total = PowerSeries.zero(din, dmax)
    for alpha, c in f.coeffs.items():
        term = PowerSeries.constant(din, dmax, c)
        for i, a in enumerate(alpha):
            if a:
                term = mul(term, powcache[i][a])
        total = total + term
    return total


class SeriesMap:
    """A tuple of :class:`PowerSeries` sharing input dimension and cap."""

    __slots__ = ("d_in", "d_out", "dmax", "components")

    def __init__(self, components):
        components = list(components)
        if not components:
            raise ShapeError("a SeriesMap needs at least one component")
        d_in = components[0].dim
        dmax = components[0].dmax
        for c in components:
            if c.dim != d_in or c.dmax != dmax:
                raise ShapeError("SeriesMap components must share dimension and cap")
        self.d_in = d_in
        self.d_out = len(components)
        self.dmax = dmax
        self.components = components

    def __repr__(self):
        return f"SeriesMap({self.d_in}->{self.d_out}, dmax={self.dmax})"

    @staticmethod
    def identity(d, dmax):
        return SeriesMap([PowerSeries.variable(d, dmax, i) for i in range(d)])

    @staticmethod
    def from_linear(A, dmax):
        """The linear map x -> A x as a SeriesMap."""
        A = np.asarray(A, dtype=complex)
        comps = []
        for row in A:
            coeffs = {}
            for i, c in enumerate(row):
                if abs(c) > PRUNE_TOL:
                    alpha = tuple(1 if k == i else 0 for k in range(A.shape[1]))
                    coeffs[alpha] = c
            comps.append(PowerSeries(A.shape[1], dmax, coeffs))
        return SeriesMap(comps)

    def value_at_zero(self):
        return np.array([c.at_zero() for c in self.components])

    def linear_matrix(self):
        """d_out x d_in matrix of the linear part at 0."""
        return np.array([c.linear_part() for c in self.components])

    def jacobian(self, keep_cap=True):
        """Matrix of partial-derivative series, shape (d_out, d_in)."""
        return [
            [differentiate(c, j, keep_cap=keep_cap) for j in range(self.d_in)]
            for c in self.components
        ]

    def with_cap(self, dmax):
        return SeriesMap([c.with_cap(dmax) for c in self.components])

    def evaluate(self, point):
        return np.array([c.evaluate(point) for c in self.components])

    def evaluate_many(self, points):
        return np.stack([c.evaluate_many(points) for c in self.components], axis=-1)

    def compose(self, other, allow_recenter=False):
        """self after other: (self o other)(x) = self(other(x))."""
        return SeriesMap([compose(c, other, allow_recenter) for c in self.components])

    def __sub__(self, other):
        return SeriesMap([a - b for a, b in zip(self.components, other.components)])

    def __add__(self, other):
        return SeriesMap([a + b for a, b in zip(self.components, other.components)])


def invert_map(H, sv_threshold=1e-10):
    """Compositional inverse K of H with K(H(x)) = x through the cap.

    Requires ``H(0)=0`` and an invertible linear part.  Solved by the
    fixed-point iteration K <- L^{-1} o (id - N o K), where L is the
    linear part and N = H - L; each sweep fixes one more degree.
    """
    if H.d_in != H.d_out:
        raise ShapeError("invert_map requires a square map")
    if np.max(np.abs(H.value_at_zero())) > 1e-12:
        raise PreconditionError("invert_map requires H(0)=0")
    d, dmax = H.d_in, H.dmax
    L = H.linear_matrix()
    svals = np.linalg.svd(L, compute_uv=False)
    if svals[-1] <= sv_threshold:
        raise SingularityError(
            f"linear part numerically singular (smallest singular value {svals[-1]:.3e})",
            singular_value=float(svals[-1]),
        )
    Linv = np.linalg.inv(L)
    N = H - SeriesMap.from_linear(L, dmax)
    Linv_map = SeriesMap.from_linear(Linv, dmax)
    K = Linv_map
    ident = SeriesMap.identity(d, dmax)
    for _ in range(dmax):
        NK = SeriesMap([compose(c, K) for c in N.components])
        K = Linv_map.compose(ident - NK)
    return K


# ----------------------------------------------------------------------
# series matrices (lists of lists of PowerSeries)
# ----------------------------------------------------------------------

def smat_identity(m, dim, dmax):
    return [
        [PowerSeries.constant(dim, dmax, 1.0 if i == j else 0.0) for j in range(m)]
        for i in range(m)
    ]


def smat_mul(A, B):
    m, k = len(A), len(A[0])
    if len(B) != k:
        raise ShapeError("series matrix shape mismatch")
    p = len(B[0])
    out = []
    for i in range(m):
        row = []
        for j in range(p):
            acc = PowerSeries.zero(A[0][0].dim, A[0][0].dmax)
            for l in range(k):
                acc = acc + mul(A[i][l], B[l][j])
            row.append(acc)
        out.append(row)
    return out


def smat_apply(A, v):
    """Apply a series matrix to a list of series (matrix-vector product)."""
    out = []
    for row in A:
        acc = PowerSeries.zero(v[0].dim, v[0].dmax)
        for a, x in zip(row, v):
            acc = acc + mul(a, x)
        out.append(acc)
    return out


def smat_inv(M, sv_threshold=1e-10):
    """Inverse of a series matrix via Neumann series.

    Factor M = M0 (I + G) with M0 the constant part and G vanishing at 0;
    then M^{-1} = (sum_k (-G)^k) M0^{-1}, truncated at the degree cap.
    """
    m = len(M)
    dim, dmax = M[0][0].dim, M[0][0].dmax
    M0 = np.array([[M[i][j].at_zero() for j in range(m)] for i in range(m)])
    svals = np.linalg.svd(M0, compute_uv=False)
    if svals[-1] <= sv_threshold:
        raise SingularityError(
            f"series matrix constant part singular (smallest singular value {svals[-1]:.3e})",
            singular_value=float(svals[-1]),
        )
    M0inv = np.linalg.inv(M0)
    M0inv_s = [
        [PowerSeries.constant(dim, dmax, M0inv[i][j]) for j in range(m)] for i in range(m)
    ]
    G = smat_mul(M0inv_s, M)
    for i in range(m):
        G[i][i] = G[i][i] - 1.0
    acc = smat_identity(m, dim, dmax)
    term = smat_identity(m, dim, dmax)
    for _ in range(dmax):
        term = smat_mul(term, G)
        term = [[(-1.0) * e for e in row] for row in term]
        acc = [[a + t for a, t in zip(ra, rt)] for ra, rt in zip(acc, term)]
        if all(e.is_zero() for row in term for e in row):
            break
    return smat_mul(acc, M0inv_s)


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

def _grlex_key(alpha):
    return (sum(alpha), alpha)


def series_to_dict(f):
    terms = []
    for alpha in sorted(f.coeffs, key=_grlex_key):
        c = f.coeffs[alpha]
        terms.append({"alpha": list(alpha), "re": c.real, "im": c.imag})
    return {"dim": f.dim, "dmax": f.dmax, "terms": terms}


def series_from_dict(obj):
    coeffs = {
        tuple(t["alpha"]): complex(t["re"], t["im"]) for t in obj["terms"]
    }
    return PowerSeries(obj["dim"], obj["dmax"], coeffs)


def series_to_json(f):
    return json.dumps(series_to_dict(f), sort_keys=True, separators=(",", ":"))


def series_from_json(text):
    return series_from_dict(json.loads(text))


def map_to_dict(m):
    return {
        "d_in": m.d_in,
        "d_out": m.d_out,
        "dmax": m.dmax,
        "components": [series_to_dict(c) for c in m.components],
    }


def map_from_dict(obj):
    return SeriesMap([series_from_dict(c) for c in obj["components"]])
