"""Norm estimators: Zygmund, Hoelder, and analytic-coefficient norms.

Two kinds of norms live here.

* Series-exact norms on :class:`~frobflat.series.PowerSeries`:
  ``anorm`` (weighted l1 of Taylor coefficients at a radius) and the
  probe-based ``bnorm_estimate`` (sup of the complexified series on a
  sampled complex sphere).

* Grid-sample estimators on :class:`GridField`: ``zygmund_estimate`` and
  ``holder_estimate``.  These are suprema over finitely many probes and
  therefore *lower bounds* of the true norms; the flag on the returned
  :class:`NormEstimate` records this.

The Zygmund norm of order s in (0,1] is

    ||f|| = ||f||_{C^{0,s/2}} + sup_{x,h} |h|^{-s} |f(x+2h) - 2f(x+h) + f(x)|

over all x with x, x+h, x+2h in the domain; for s = m + sigma with
integer m >= 1 it is the sum of the order-sigma norms of all derivatives
up to order m.  Integer orders use genuine second differences, never the
Lipschitz surrogate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, ResolutionError, ShapeError
from .series import PowerSeries


@dataclass(frozen=True)
class NormEstimate:
    """A norm value tagged with the space and how it was estimated."""

    value: float
    space: str               # e.g. "Zygmund(1.5)", "Holder(0,1)", "A(2,0.5)", "B(2,0.5)"
    method: str              # "series-exact" or "grid-sample"
    resolution: float | int  # grid spacing or degree cap
    lower_bound: bool = False

    def __post_init__(self):
        if self.value < 0:
            raise PreconditionError("norms are non-negative")


class GridField:
    """Samples of a (vector-valued) function on the cube around B(R).

    Values are stored on the full bounding cube ``[-R, R]^d`` on a uniform
    lattice; a mask marks the lattice points inside the closed ball.  A
    trailing axis of ``values`` beyond the lattice axes indexes components.
    """

    def __init__(self, radius, counts, values):
        counts = tuple(int(c) for c in counts)
        if any(c < 3 for c in counts):
            raise ResolutionError("need at least 3 samples per axis")
        values = np.asarray(values)
        if values.shape[: len(counts)] != counts:
            raise ShapeError(f"values shape {values.shape} != counts {counts}")
        self.radius = float(radius)
        self.counts = counts
        self.values = values
        self.dim = len(counts)
        axes = [np.linspace(-self.radius, self.radius, c) for c in counts]
        self.spacing = np.array([ax[1] - ax[0] for ax in axes])
        grids = np.meshgrid(*axes, indexing="ij")
        rr = np.sqrt(sum(g**2 for g in grids))
        self.mask = rr <= self.radius * (1 + 1e-12)
        self._points = np.stack(grids, axis=-1)

    @staticmethod
    def from_function(fn, radius, counts):
        """Sample ``fn`` (vectorized over an (N, d) point array) on the cube."""
        counts = tuple(int(c) for c in counts)
        axes = [np.linspace(-radius, radius, c) for c in counts]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        vals = np.asarray(fn(pts))
        shape = counts + vals.shape[1:]
        return GridField(radius, counts, vals.reshape(shape))

    def component(self, k):
        if self.values.ndim == self.dim:
            if k != 0:
                raise ShapeError("scalar field has a single component")
            return self.values
        return self.values[..., k]

    @property
    def ncomp(self):
        if self.values.ndim == self.dim:
            return 1
        return int(np.prod(self.values.shape[self.dim:]))


# ----------------------------------------------------------------------
# series-exact norms
# ----------------------------------------------------------------------

def anorm(f, radius):
    """Weighted l1 coefficient norm sum_alpha |a_alpha| radius^|alpha|."""
    if radius <= 0:
        raise PreconditionError("radius must be positive")
    value = sum(abs(c) * radius ** sum(a) for a, c in f.coeffs.items())
    return NormEstimate(
        value=float(value),
        space=f"A({f.dim},{radius})",
        method="series-exact",
        resolution=f.dmax,
    )


def scale_series(f, gamma, D, eta1):
    """Substitute t -> gamma t, valid for 0 < gamma <= eta1/D.

    The scaled series satisfies anorm(f_gamma, D) <= (gamma D / eta1) *
    anorm(f, eta1) whenever f(0) = 0.
    """
    if not 0 < gamma <= eta1 / D:
        raise PreconditionError(
            f"gamma={gamma} outside the admissible range (0, eta1/D] = (0, {eta1 / D}]"
        )
    return PowerSeries(
        f.dim, f.dmax, {a: c * gamma ** sum(a) for a, c in f.coeffs.items()}
    )


def substitute_scale(f, gamma):
    """Unchecked substitution t -> gamma t (no norm-inequality contract)."""
    return PowerSeries(
        f.dim, f.dmax, {a: c * gamma ** sum(a) for a, c in f.coeffs.items()}
    )


def bnorm_estimate(f, radius, nprobes=64, nphases=8, seed=0):
    """Sup of the complexified series on sampled points of the sphere |zeta| = radius.

    Probes: the complex coordinate directions with several phases, plus
    seeded random complex directions.  A finite sup, hence a lower bound.
    """
    rng = np.random.default_rng(seed)
    d = f.dim
    dirs = []
    phases = np.exp(2j * np.pi * np.arange(nphases) / nphases)
    for i in range(d):
        e = np.zeros(d, dtype=complex)
        e[i] = 1.0
        for ph in phases:
            dirs.append(ph * e)
    for _ in range(nprobes):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        dirs.append(v / np.linalg.norm(v))
    pts = radius * np.array(dirs)
    vals = np.abs(f.evaluate_many(pts))
    return NormEstimate(
        value=float(np.max(vals)) if len(vals) else 0.0,
        space=f"B({d},{radius})",
        method="grid-sample",
        resolution=f.dmax,
        lower_bound=True,
    )


# ----------------------------------------------------------------------
# grid probe machinery
# ----------------------------------------------------------------------

def _probe_offsets(counts, seed=0, n_random=8, max_int=3):
    """Integer lattice offsets used for difference probes.

    Dyadic multiples of the axis directions (up to the cube diameter) plus
    ``n_random`` seeded integer directions, each also dyadically extended.
    """
    rng = np.random.default_rng(seed)
    d = len(counts)
    nmax = max(counts) - 1
    offs = []
    for axis in range(d):
        step = 1
        while step <= nmax:
            v = np.zeros(d, dtype=int)
            v[axis] = step
            offs.append(tuple(v))
            step *= 2
    for _ in range(n_random):
        while True:
            v = rng.integers(-max_int, max_int + 1, size=d)
            if np.any(v):
                break
        k = 1
        while np.max(np.abs(v * k)) <= nmax:
            offs.append(tuple(v * k))
            k *= 2
    # dedupe, preserve order
    seen, uniq = set(), []
    for o in offs:
        if o not in seen:
            seen.add(o)
            uniq.append(o)
    return uniq


def _shift_slices(counts, offset):
    """Slices (base, shifted) selecting x and x+offset pairs on the lattice."""
    base, shifted = [], []
    for c, o in zip(counts, offset):
        if abs(o) >= c:
            return None
        if o >= 0:
            base.append(slice(0, c - o))
            shifted.append(slice(o, c))
        else:
            base.append(slice(-o, c))
            shifted.append(slice(0, c + o))
    return tuple(base), tuple(shifted)


def _pair_sup(values, mask, counts, spacing, offsets, exponent):
    """sup |f(x+h)-f(x)| / |h|^exponent over probe pairs inside the ball."""
    best = 0.0
    for off in offsets:
        sl = _shift_slices(counts, off)
        if sl is None:
            continue
        b, s = sl
        m = mask[b] & mask[s]
        if not np.any(m):
            continue
        diff = np.abs(values[s][m] - values[b][m])
        h = float(np.linalg.norm(np.asarray(off) * spacing))
        best = max(best, float(np.max(diff)) / h**exponent)
    return best


def _second_diff_sup(values, mask, counts, spacing, offsets, s):
    """sup |f(x+2h)-2f(x+h)+f(x)| / |h|^s over probe triples in the ball."""
    best = 0.0
    for off in offsets:
        off2 = tuple(2 * o for o in off)
        sl1 = _shift_slices(counts, off)
        sl2 = _shift_slices(counts, off2)
        if sl1 is None or sl2 is None:
            continue
        b2, s2 = sl2
        # x runs over b2; x+h is b2 shifted by off; x+2h is s2
        mid = tuple(slice(bb.start + o, bb.stop + o) for bb, o in zip(b2, off))
        m = mask[b2] & mask[mid] & mask[s2]
        if not np.any(m):
            continue
        d2 = np.abs(values[s2][m] - 2 * values[mid][m] + values[b2][m])
        h = float(np.linalg.norm(np.asarray(off) * spacing))
        best = max(best, float(np.max(d2)) / h**s)
    return best


def _deriv4(values, axis, h):
    """4th-order central first derivative along ``axis``; 2nd-order near edges."""
    n = values.shape[axis]
    if n < 5:
        raise ResolutionError("need >= 5 samples per axis for derivative stencils")
    out = np.gradient(values, h, axis=axis)
    v = np.moveaxis(values, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12.0 * h)
    return out


def _derivative_grid(values, alpha, spacing):
    out = np.array(values, dtype=complex)
    for axis, order in enumerate(alpha):
        for _ in range(order):
            out = _deriv4(out, axis, spacing[axis])
    return out


def _multi_indices(d, max_total):
    for alpha in itertools.product(range(max_total + 1), repeat=d):
        if sum(alpha) <= max_total:
            yield alpha


def _frac_zygmund(values, mask, counts, spacing, offsets, sigma):
    """The order-sigma (sigma in (0,1]) Zygmund norm of one scalar grid."""
    sup = float(np.max(np.abs(values[mask]))) if np.any(mask) else 0.0
    holder = _pair_sup(values, mask, counts, spacing, offsets, sigma / 2.0)
    second = _second_diff_sup(values, mask, counts, spacing, offsets, sigma)
    return sup + holder + second


def zygmund_estimate(f, s, seed=0):
    """Probe-based estimate of the order-s Zygmund norm of a GridField."""
    if s <= 0:
        raise PreconditionError("Zygmund order must be positive")
    m = int(math.ceil(s)) - 1
    sigma = s - m
    if m > 0 and any(c < 5 for c in f.counts):
        raise ResolutionError("need >= 5 samples per axis for derivative orders >= 1")
    offsets = _probe_offsets(f.counts, seed=seed)
    total = 0.0
    for k in range(f.ncomp):
        vals = np.asarray(f.component(k), dtype=complex)
        comp_total = 0.0
        for alpha in _multi_indices(f.dim, m):
            g = _derivative_grid(vals, alpha, f.spacing)
            comp_total += _frac_zygmund(g, f.mask, f.counts, f.spacing, offsets, sigma)
        total = max(total, comp_total)
    return NormEstimate(
        value=total,
        space=f"Zygmund({s})",
        method="grid-sample",
        resolution=float(np.max(f.spacing)),
        lower_bound=True,
    )


def holder_estimate(f, m, a, seed=0):
    """Probe-based estimate of the C^{m,a} Hoelder norm of a GridField."""
    if m < 0 or not 0 <= a <= 1:
        raise PreconditionError("need m >= 0 and a in [0,1]")
    if m > 0 and any(c < 5 for c in f.counts):
        raise ResolutionError("need >= 5 samples per axis for derivative orders >= 1")
    offsets = _probe_offsets(f.counts, seed=seed)
    total = 0.0
    for k in range(f.ncomp):
        vals = np.asarray(f.component(k), dtype=complex)
        comp_total = 0.0
        for alpha in _multi_indices(f.dim, m):
            g = _derivative_grid(vals, alpha, f.spacing)
            sup = float(np.max(np.abs(g[f.mask]))) if np.any(f.mask) else 0.0
            comp_total += sup
            if a > 0:
                comp_total += _pair_sup(g, f.mask, f.counts, f.spacing, offsets, a)
        total = max(total, comp_total)
    return NormEstimate(
        value=total,
        space=f"Holder({m},{a})",
        method="grid-sample",
        resolution=float(np.max(f.spacing)),
        lower_bound=True,
    )


# ----------------------------------------------------------------------
# grid-field file format
# ----------------------------------------------------------------------

def gridfield_to_file(gf, path):
    """Write a grid field to a little-endian binary file.

    Layout: int64 d, int64 ncomp, int64 counts[d], float64 radius, then
    the sample values as complex doubles in row-major order (component
    index fastest).
    """
    with open(path, "wb") as fh:
        header = np.array([gf.dim, gf.ncomp, *gf.counts], dtype="<i8")
        header.tofile(fh)
        np.array([gf.radius], dtype="<f8").tofile(fh)
        vals = np.ascontiguousarray(gf.values, dtype=complex)
        vals.astype("<c16").tofile(fh)


def gridfield_from_file(path):
    """Read a grid field written by :func:`gridfield_to_file`."""
    with open(path, "rb") as fh:
        d, ncomp = np.fromfile(fh, dtype="<i8", count=2)
        counts = tuple(np.fromfile(fh, dtype="<i8", count=int(d)))
        radius = float(np.fromfile(fh, dtype="<f8", count=1)[0])
        total = int(np.prod(counts)) * int(ncomp)
        vals = np.fromfile(fh, dtype="<c16", count=total)
    if vals.size != total:
        raise ResolutionError(f"truncated grid-field file {path}")
    shape = counts if ncomp == 1 else counts + (int(ncomp),)
    return GridField(radius, counts, vals.reshape(shape))
