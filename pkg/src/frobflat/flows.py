"""Lie-series flows, the composed flow map, and first integrals.

Flows are computed as Lie series: for an analytic field V and the
coordinate functions x_i, the time-s flow from a point p is

    x_i(s) = sum_{k <= Dmax} (s^k / k!) (V^k x_i)(p),

with V acting as a derivation on truncated series.  The composed map

    Psi(t, u, v) = e^{t_1 X_1} ... e^{t_r X_r}
                   e^{u_1 L_1} ... e^{u_n L_n}
                   e^{v_1 Z_1} ... e^{v_n Z_n} . 0,
    Z_j = (1/2)(d/dzeta_j - i d/dzeta_{j+n}),

is a SeriesMap in the r+2n flow parameters; first integrals are
w_l = V_l o Psi^{-1} (the coordinate function V_l(t,u,v) = v_l), so
w_l is simply the (r+n+l)-th component of Psi^{-1}.

Complexification is a formal data-level no-op: the series coefficients
of a real-analytic field are reused verbatim with the variables
reinterpreted as complex; brackets and flows are formal operations and
agree on the nose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ShapeError
from .frames import VectorField
from .series import PowerSeries, SeriesMap, compose, invert_map, mul


@dataclass
class FlowResult:
    """A flow map together with truncation diagnostics."""

    map: SeriesMap
    truncation_residual: float
    trust_radius: float


@dataclass
class FirstIntegrals:
    """First integrals w_1..w_n of a commuting complexified frame."""

    w: list            # PowerSeries on the complexified domain
    psi_inverse: SeriesMap
    eta1: float
    annihilation_residual: float


def complexify(f):
    """Formal complexification of a series (coefficients unchanged).

    The returned series is coefficient-identical; only the meaning of the
    variables changes (t_k -> sigma_k, x_m -> zeta_m).  Restriction to
    the real slice is therefore exact by construction.
    """
    return PowerSeries(f.dim, f.dmax, dict(f.coeffs))


def _lie_derivatives(V, dmax):
    """phi_i^{(k)} = V^k applied to the i-th coordinate function, k = 0..dmax."""
    d = V.dim
    rows = []
    for i in range(d):
        phi = PowerSeries.variable(d, dmax, i)
        chain = [phi]
        for _ in range(dmax):
            chain.append(V.apply_to(chain[-1], keep_cap=True))
        rows.append(chain)
    return rows


def flow_step(V, G, param_index, n_params=None):
    """Apply the factor e^{s V} to a series map G, s = the given parameter.

    G maps the flow parameters into the field's space and must satisfy
    G(0) = 0.  Returns the series map  params -> e^{s V}(G(params)).
    """
    d = V.dim
    if G.d_out != d:
        raise ShapeError("flow_step: map target dimension must match the field")
    if np.max(np.abs(G.value_at_zero())) > 1e-12:
        raise PreconditionError("flow_step requires G(0) = 0")
    dmax = G.dmax
    npar = G.d_in if n_params is None else n_params
    s_pow = [PowerSeries.constant(npar, dmax, 1.0)]
    svar = PowerSeries.variable(npar, dmax, param_index)
    for _ in range(dmax):
        s_pow.append(mul(s_pow[-1], svar))
    rows = _lie_derivatives(V, dmax)
    comps = []
    for i in range(d):
        acc = PowerSeries.zero(npar, dmax)
        for k in range(dmax + 1):
            phi_k = rows[i][k]
            if phi_k.is_zero():
                continue
            term = compose(phi_k, G)
            acc = acc + mul(term, s_pow[k]).scale(1.0 / math.factorial(k))
        comps.append(acc)
    return SeriesMap(comps)


def exp_flow(V, t=None, p0=None, dmax=None, trust_tol=1e-10):
    """Flow of a series vector field as a Lie series.

    Returns a :class:`FlowResult` whose map sends (s, p) -> e^{sV} p in
    the combined variables (time first, then the initial point); when a
    numeric time ``t`` and point ``p0`` are supplied, the ``endpoint``
    attribute of the result map evaluation is returned instead.
    """
    d = V.dim
    cap = V.dmax if dmax is None else dmax
    # map (s, p) -> p
    start = SeriesMap(
        [PowerSeries.variable(1 + d, cap, 1 + i) for i in range(d)]
    )
    Vc = V.with_cap(cap)
    lifted = flow_step(Vc, start, 0)
    # truncation diagnostic: magnitude of the top-order time term
    top = 0.0
    rows = _lie_derivatives(Vc, cap)
    for i in range(d):
        top = max(
            top,
            max((abs(c) for c in rows[i][cap].coeffs.values()), default=0.0)
            / math.factorial(cap),
        )
    trust = 1.0 if top == 0 else min(1.0, (trust_tol / top) ** (1.0 / max(cap, 1)))
    result = FlowResult(map=lifted, truncation_residual=top, trust_radius=trust)
    if t is not None and p0 is not None:
        point = np.concatenate([[t], np.asarray(p0, dtype=complex)])
        return result, lifted.evaluate(point)
    return result


def build_psi(X, L, Z=None, dmax=None):
    """The composed flow map Psi(t, u, v) starting from the origin.

    X: r fields, L: n fields (complexified), Z: n fields (defaults to the
    model antiholomorphic-partner fields, whose dz coefficient is 1).
    The factors act right to left; the result is a SeriesMap in the
    r+2n parameters (t, u, v).
    """
    r = len(X)
    n = len(L)
    if X:
        rr, nn = X[0].r, X[0].n
    elif L:
        rr, nn = L[0].r, L[0].n
    else:
        raise PreconditionError("build_psi needs at least one field")
    if (rr, nn) != (r, n):
        raise ShapeError(f"field shape (r,n)=({rr},{nn}) != list lengths ({r},{n})")
    d = r + 2 * n
    cap = dmax if dmax is not None else (X[0].dmax if X else L[0].dmax)
    if Z is None:
        Z = []
        for j in range(n):
            comps = [PowerSeries.zero(d, cap) for _ in range(d)]
            comps[r + j] = PowerSeries.constant(d, cap, 1.0)  # dz_j coefficient
            Z.append(VectorField(r, n, comps))
    G = SeriesMap([PowerSeries.zero(d, cap) for _ in range(d)])
    factors = (
        [(X[k], k) for k in range(r)]
        + [(L[j], r + j) for j in range(n)]
        + [(Z[j], r + n + j) for j in range(n)]
    )
    for V, idx in reversed(factors):
        G = flow_step(V.with_cap(cap), G, idx)
    return G


def first_integrals(psi, r, n, eta1=1.0, fields=None):
    """First integrals w_l = V_l o Psi^{-1} and their annihilation residual.

    ``fields`` (optional) are the complexified frame fields used to
    measure the residual max_l ||X_k w_l||, ||L_j w_l|| as radius-eta1/2
    coefficient norms.
    """
    from .funcspaces import anorm

    K = invert_map(psi)
    w = [K.components[r + n + l] for l in range(n)]
    resid = 0.0
    if fields:
        for f in fields:
            for wl in w:
                g = f.apply_to(wl, keep_cap=True)
                resid = max(resid, anorm(g, eta1 / 2.0).value)
    return FirstIntegrals(w=w, psi_inverse=K, eta1=eta1, annihilation_residual=resid)
