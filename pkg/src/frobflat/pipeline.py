"""The flattening pipeline: normalize, reduce, scale, correct, flow, invert.

``flatten`` runs the stage chain

    structure check -> point_normalize -> reduce_to_EF -> [gamma loop:
    scale_frame -> quasilinear_correction -> complexified flows ->
    first integrals -> chart assembly]

and returns a :class:`FlattenResult` holding the chart Phi (with
Phi(0)=0 and d Phi(0) = K2^{-1} I), the series matrix A of the frame
relation [du; dwbar] = K2^{-1} (I + A) [Phi^* X; Phi^* L], and a
residual report.  gamma is halved dyadically until the correction solver
succeeds and the measured matrix norm of A is <= 1/4.

``verify_chart`` recomputes every residual through an independent path:
finite-difference Jacobians on fresh probe points, never the pipeline's
own intermediate series.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    DivergenceError,
    PreconditionError,
    StageError,
)
from .elliptic import (
    CorrectionConfig,
    _reduced_frame_fields,
    quasilinear_correction,
    transformed_blocks,
)
from .flows import build_psi, first_integrals
from .frames import (
    Frame,
    VectorField,
    ball_probes,
    check_structure,
    commutator,
    point_normalize,
    pullback,
    reduce_to_EF,
    scale_frame,
)
from .funcspaces import GridField, anorm, zygmund_estimate
from .series import (
    PowerSeries,
    SeriesMap,
    invert_map,
    map_to_dict,
    series_to_dict,
    smat_inv,
)


@dataclass
class FlattenConfig:
    dmax: int = 8
    grid: int = 32
    tol: float = 1e-8
    seed: int = 0
    radius: float = 1.0
    a_norm_cap: float = 0.25
    probe_count: int = 64
    max_halvings: int = 20
    prescale_norm: float = 0.12   # cheap pre-check on scaled block norms (radius 2)
    s0: float = 0.5

    def to_dict(self):
        return asdict(self)


@dataclass
class Chart:
    """A candidate flattening diffeomorphism with its recorded constants."""

    phi: SeriesMap
    phi_inverse: SeriesMap
    pre_chart: SeriesMap          # affine point normalization
    domain_radius: float
    K2: float
    K1: float
    gamma: float
    eta: dict
    provenance: list


@dataclass
class ResidualReport:
    span_residual: float
    commutator_residual: float
    det_min: float
    det_max: float
    relation_residual: float
    annihilation_residual: float
    norm_table: dict
    probe_count: int
    method: str                    # "series" (pipeline) or "finite-difference"
    pullback_norm_ratio: float = float("nan")

    def to_dict(self):
        out = dict(self.__dict__)
        return out


@dataclass
class FlattenResult:
    r: int
    n: int
    chart: Chart
    A: list                        # (n+r) x (n+r) series matrix
    A_norm: float
    report: ResidualReport
    w_normalized: list             # first integrals in normalized coordinates
    provenance_hash: str
    config: FlattenConfig


# ----------------------------------------------------------------------
# small numeric helpers
# ----------------------------------------------------------------------

def _complex_basis_split(a, r, n):
    """Coordinate-basis vector -> (t-part, dz-part, dzbar-part)."""
    t = a[:r]
    b = a[r:r + n] + 1j * a[r + n:r + 2 * n]
    c = a[r:r + n] - 1j * a[r + n:r + 2 * n]
    return t, b, c


def _fields_hash(fields, zeta0, config):
    payload = {
        "fields": [[series_to_dict(c) for c in f.comps] for f in fields],
        "zeta0": [float(x) for x in np.asarray(zeta0, dtype=float)],
        "config": config.to_dict(),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _field_matrix_norm(A, radius=1.0):
    """max over rows of the summed radius-1 coefficient norms of the entries."""
    best = 0.0
    for row in A:
        best = max(best, sum(anorm(e, radius).value for e in row))
    return best


def _sample_grid_counts(d):
    return {1: 33, 2: 21, 3: 11, 4: 7}.get(d, 7)


def _series_gridfield(comps, radius, counts):
    """Sample a list of series as a vector-valued GridField on B(radius)."""
    def fn(pts):
        return np.stack([c.evaluate_many(pts) for c in comps], axis=-1)

    d = comps[0].dim
    return GridField.from_function(fn, radius, (counts,) * d)


# ----------------------------------------------------------------------
# flatten
# ----------------------------------------------------------------------

def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
            return False

    return _Ctx()


def flatten(fields, zeta0=None, config=None):
    """Construct the flattening chart for an elliptic structure near a point."""
    config = config or FlattenConfig()
    r, n = fields[0].r, fields[0].n
    d = r + 2 * n
    if zeta0 is None:
        zeta0 = np.zeros(d)
    zeta0 = np.asarray(zeta0, dtype=float)
    prov_hash = _fields_hash(fields, zeta0, config)
    provenance = []

    with _stage("structure"):
        probes = zeta0 + ball_probes(d, config.radius / 2, config.probe_count, config.seed)
        rep = check_structure(fields, probes, tol=max(config.tol, 1e-6))
        if not rep.ok:
            failing = [k for k, v in rep.checks.items() if not v]
            raise PreconditionError(f"structure check failed: {failing} (probe set around {zeta0.tolist()})")
        provenance.append("structure")

    with _stage("normalize"):
        pre_chart, recomb, nfields = point_normalize(fields, zeta0)
        provenance.append("normalize")

    with _stage("reduce"):
        frame = Frame.from_fields(nfields, r, n)
        reduced, multiplier, eta0 = reduce_to_EF(frame, probe_seed=config.seed)
        provenance.append("reduce")

    dmax = fields[0].dmax
    gamma = min(eta0 / 2.0, 1.0)
    last_error = None
    for _ in range(config.max_halvings + 1):
        try:
            result = _flatten_at_gamma(
                nfields, reduced, eta0, gamma, r, n, dmax, config
            )
        except (PreconditionError, DivergenceError) as exc:
            last_error = exc
            gamma /= 2.0
            continue
        except StageError as exc:
            if not isinstance(exc.cause, (PreconditionError, DivergenceError)):
                raise
            last_error = exc
            gamma /= 2.0
            continue
        A, A_norm, chart_data = result
        if A_norm <= config.a_norm_cap:
            break
        last_error = PreconditionError(
            f"matrix norm of A = {A_norm:.3g} above cap {config.a_norm_cap}"
        )
        gamma /= 2.0
    else:
        raise StageError(
            "scale",
            DivergenceError(
                f"no admissible gamma found after {config.max_halvings} halvings "
                f"(last error: {last_error})"
            ),
        )

    phi, phi_inv, correction, fi = chart_data
    provenance += ["scale", "correct", "complexify", "flows", "integrals", "assemble"]
    K2 = 1.0 / gamma
    chart = Chart(
        phi=phi,
        phi_inverse=phi_inv,
        pre_chart=pre_chart,
        domain_radius=1.0,
        K2=K2,
        K1=K2,
        gamma=gamma,
        eta={
            "eta0": eta0,
            "eta1": 1.0,
            "eta3": 1.0,
            "correction_residual": correction.divergence_residual,
            "correction_tail": correction.truncation_tail,
        },
        provenance=provenance,
    )
    # normalized first integrals: w components of phi^{-1}, rescaled so dw(0)=dz
    w_norm = []
    for l in range(n):
        wx = phi_inv.components[r + l]
        wy = phi_inv.components[r + n + l]
        w_norm.append((wx + wy.scale(1j)).scale(gamma))

    with _stage("verify"):
        report = _series_report(nfields, chart, A, fi, r, n, config)

    return FlattenResult(
        r=r,
        n=n,
        chart=chart,
        A=A,
        A_norm=A_norm,
        report=report,
        w_normalized=w_norm,
        provenance_hash=prov_hash,
        config=config,
    )


def _flatten_at_gamma(nfields, reduced, eta0, gamma, r, n, dmax, config):
    """One gamma attempt: scale, correct, flow, assemble the chart and A."""
    d = r + 2 * n
    with _stage("scale"):
        scaled = scale_frame(reduced, gamma, eta0)
        pre_norm = 0.0
        for block in (scaled.B, scaled.D):
            for row in block:
                for e in row:
                    pre_norm = max(pre_norm, anorm(e, 2.0).value)
        if pre_norm > config.prescale_norm:
            raise PreconditionError(
                f"scaled block norm {pre_norm:.3g} above pre-check threshold"
            )

    with _stage("correct"):
        correction = quasilinear_correction(
            scaled.B, scaled.D, r, n, CorrectionConfig(tol=1e-12)
        )
        if n:
            Bblk, Dblk, H = transformed_blocks(
                scaled.B, scaled.D, correction.R2, r, n, dmax
            )
        else:
            Bblk, Dblk, H = [], [], SeriesMap.identity(d, dmax)

    with _stage("flows"):
        tilde = _reduced_frame_fields(Bblk, Dblk, r, n, dmax)
        Xt, Lt = tilde[:r], tilde[r:]
        psi = build_psi(Xt, Lt, dmax=dmax)
        fi = first_integrals(psi, r, n, fields=tilde)

    with _stage("assemble"):
        comps = [PowerSeries.variable(d, dmax, k) for k in range(r)]
        for l in range(n):
            w = fi.w[l]
            comps.append((w + w.conjugate()).scale(0.5))
        for l in range(n):
            w = fi.w[l]
            comps.append((w - w.conjugate()).scale(-0.5j))
        psi_w = SeriesMap(comps)
        phi1 = invert_map(psi_w)
        Hinv = invert_map(H)
        phi2 = Hinv.compose(phi1)
        phi = SeriesMap([c.scale(gamma) for c in phi2.components])
        phi = _snap_linear_part(phi, gamma)
        phi_inv = invert_map(phi)
        K2 = 1.0 / gamma
        pulled = [pullback(phi, f) for f in nfields]
        S = []
        for g in pulled:
            row = [g.t_comp(k) for k in range(r)]
            row += [g.zbar_comp(j) for j in range(n)]
            S.append(row)
        Sinv = smat_inv(S)
        A = [[e.scale(K2) for e in row] for row in Sinv]
        for i in range(r + n):
            A[i][i] = A[i][i] - 1.0
        A = _snap_zero_constant(A)
        A_norm = _field_matrix_norm(A, radius=1.0)
    return A, A_norm, (phi, phi_inv, correction, fi)


def _snap_linear_part(phi, gamma, tol=1e-9):
    """Enforce phi(0)=0 and d phi(0) = gamma I exactly (verify, then snap)."""
    d = phi.d_in
    if np.max(np.abs(phi.value_at_zero())) > tol:
        raise PreconditionError("chart value at 0 deviates from 0")
    L = phi.linear_matrix()
    if np.max(np.abs(L - gamma * np.eye(d))) > tol * max(1.0, gamma):
        raise PreconditionError("chart linear part deviates from gamma * I")
    comps = []
    for i, c in enumerate(phi.components):
        coeffs = dict(c.coeffs)
        coeffs.pop((0,) * d, None)
        for j in range(d):
            alpha = tuple(1 if k == j else 0 for k in range(d))
            coeffs.pop(alpha, None)
            if i == j:
                coeffs[alpha] = gamma
        comps.append(PowerSeries(d, c.dmax, coeffs))
    return SeriesMap(comps)


def _snap_zero_constant(A, tol=1e-8):
    """Enforce A(0) = 0 exactly after verifying it holds numerically."""
    out = []
    for row in A:
        new_row = []
        for e in row:
            c0 = e.at_zero()
            if abs(c0) > tol:
                raise PreconditionError(f"A(0) entry {c0} deviates from 0")
            coeffs = dict(e.coeffs)
            coeffs.pop((0,) * e.dim, None)
            new_row.append(PowerSeries(e.dim, e.dmax, coeffs))
        out.append(new_row)
    return out


# ----------------------------------------------------------------------
# residual reports
# ----------------------------------------------------------------------

def _series_report(nfields, chart, A, fi, r, n, config):
    """Pipeline-internal residual report (series evaluations)."""
    d = r + 2 * n
    probes = ball_probes(d, chart.domain_radius / 2, config.probe_count, config.seed + 7)
    pulled = [pullback(chart.phi, f) for f in nfields]
    span_res = 0.0
    for g in pulled:
        for j in range(n):
            vals = np.abs(g.z_comp(j).evaluate_many(probes))
            span_res = max(span_res, float(np.max(vals)))
    # commutator membership of the pulled-back fields at probes
    comm_res = 0.0
    for i in range(len(pulled)):
        for j in range(i + 1, len(pulled)):
            br = commutator(pulled[i], pulled[j], keep_cap=True)
            for p in probes[:16]:
                c = br.value_at(p)
                V = np.array([g.value_at(p) for g in pulled])
                q, _ = np.linalg.qr(V.conj().T)
                res = np.linalg.norm(c - q @ (q.conj().T @ c))
                comm_res = max(comm_res, float(res))
    # determinant of the chart Jacobian
    J = chart.phi.jacobian()
    dets = []
    for p in probes[:32]:
        mat = np.array([[J[i][j].evaluate(p) for j in range(d)] for i in range(d)])
        dets.append(abs(np.linalg.det(mat)))
    # relation residual: K2^{-1} (I+A) S = I at probes
    relation = _relation_residual_at(
        probes[:32], chart, A, nfields, r, n, use_fd=False
    )
    norm_table = _norm_table(nfields, chart, r, n, config)
    return ResidualReport(
        span_residual=span_res,
        commutator_residual=comm_res,
        det_min=float(np.min(dets)),
        det_max=float(np.max(dets)),
        relation_residual=relation,
        annihilation_residual=fi.annihilation_residual if fi else 0.0,
        norm_table=norm_table,
        probe_count=len(probes),
        method="series",
    )


def _fd_jacobian(phi, p, h=1e-5):
    d = phi.d_in
    J = np.zeros((d, d), dtype=complex)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        f1 = phi.evaluate(p + e)
        f2 = phi.evaluate(p - e)
        f1b = phi.evaluate(p + 2 * e)
        f2b = phi.evaluate(p - 2 * e)
        J[:, j] = (8 * (f1 - f2) - (f1b - f2b)) / (12 * h)
    return J


def _relation_residual_at(probes, chart, A, nfields, r, n, use_fd):
    """sup over probes of || I - K2^{-1} (I+A)(p) S(p) ||_max."""
    d = r + 2 * n
    m = r + n
    K2 = chart.K2
    worst = 0.0
    for p in probes:
        if use_fd:
            J = _fd_jacobian(chart.phi, p)
        else:
            Js = chart.phi.jacobian()
            J = np.array([[Js[i][j].evaluate(p) for j in range(d)] for i in range(d)])
        target = chart.phi.evaluate(p).real
        S = np.zeros((m, m), dtype=complex)
        for i, f in enumerate(nfields):
            v = np.linalg.solve(J, f.value_at(target))
            t, b, c = _complex_basis_split(v, r, n)
            S[i, :r] = t
            S[i, r:] = c
        Amat = np.eye(m, dtype=complex)
        for i in range(m):
            for j in range(m):
                Amat[i, j] += A[i][j].evaluate(p)
        resid = np.eye(m) - (Amat @ S) / K2
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def _norm_table(nfields, chart, r, n, config):
    """Zygmund estimates: inputs at s0+1 on B(radius/2), chart at s0+2 on B(1/2)."""
    d = r + 2 * n
    counts = _sample_grid_counts(d)
    s0 = config.s0
    in_comps = [c for f in nfields for c in f.comps]
    gf_in = _series_gridfield(in_comps, config.radius / 2, counts)
    gf_chart = _series_gridfield(
        list(chart.phi.components), chart.domain_radius / 2, counts
    )
    z_in = zygmund_estimate(gf_in, s0 + 1, seed=config.seed)
    z_chart = zygmund_estimate(gf_chart, s0 + 2, seed=config.seed)
    return {
        "s0": s0,
        "input_zygmund_s0p1": z_in.value,
        "chart_zygmund_s0p2": z_chart.value,
        "gain_ratio": z_chart.value / (1.0 + z_in.value),
    }


def verify_chart(fields, result, probes=None, zeta0=None):
    """Independent verification: finite differences on fresh probe points."""
    config = result.config
    r, n = result.r, result.n
    d = r + 2 * n
    if zeta0 is None:
        zeta0 = np.zeros(d)
    if _fields_hash(fields, zeta0, config) != result.provenance_hash:
        raise PreconditionError("provenance mismatch: result was not produced from these inputs")
    chart = result.chart
    if probes is None:
        probes = ball_probes(d, chart.domain_radius / 2, 32, config.seed + 101)
    # re-derive the normalized fields exactly as the pipeline preamble does
    _, _, nfields = point_normalize(fields, zeta0)

    span_res = 0.0
    dets = []
    for p in probes:
        J = _fd_jacobian(chart.phi, p)
        dets.append(abs(np.linalg.det(J)))
        target = chart.phi.evaluate(p).real
        for f in nfields:
            v = np.linalg.solve(J, f.value_at(target))
            _, b, _ = _complex_basis_split(v, r, n)
            if n:
                span_res = max(span_res, float(np.max(np.abs(b))))
    relation = _relation_residual_at(probes, chart, result.A, nfields, r, n, use_fd=True)

    # finite-difference Lie brackets of the input fields, membership residual
    comm_res = 0.0
    h = 1e-5
    for p in probes[:12]:
        vals = np.array([f.value_at(p) for f in nfields])
        q, _ = np.linalg.qr(vals.conj().T)
        for i in range(len(nfields)):
            for j in range(i + 1, len(nfields)):
                JW = _fd_field_jacobian(nfields[j], p, h)
                JV = _fd_field_jacobian(nfields[i], p, h)
                br = JW @ vals[i] - JV @ vals[j]
                comm_res = max(
                    comm_res, float(np.linalg.norm(br - q @ (q.conj().T @ br)))
                )

    # pullback-norm ratio on a random constant-coefficient field (Thm item (vi) probe)
    rng = np.random.default_rng(config.seed + 5)
    zc = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    zc /= np.linalg.norm(zc)
    counts = _sample_grid_counts(d)

    def pulled_values(pts):
        out = np.zeros((len(pts), d), dtype=complex)
        for idx, p in enumerate(pts):
            J = _fd_jacobian(chart.phi, p)
            out[idx] = np.linalg.solve(J, zc)
        return out

    gf_pz = GridField.from_function(pulled_values, chart.domain_radius / 2, (counts,) * d)
    gf_z = GridField.from_function(
        lambda pts: np.tile(zc, (len(pts), 1)), chart.domain_radius / 2, (counts,) * d
    )
    s0 = config.s0
    num = zygmund_estimate(gf_pz, s0 + 1, seed=config.seed).value
    den = zygmund_estimate(gf_z, s0 + 1, seed=config.seed).value
    ratio = num / den if den > 0 else float("nan")

    norm_table = _norm_table(nfields, chart, r, n, config)
    return ResidualReport(
        span_residual=span_res,
        commutator_residual=comm_res,
        det_min=float(np.min(dets)),
        det_max=float(np.max(dets)),
        relation_residual=relation,
        annihilation_residual=result.report.annihilation_residual,
        norm_table=norm_table,
        probe_count=len(probes),
        method="finite-difference",
        pullback_norm_ratio=ratio,
    )


def _fd_field_jacobian(f, p, h=1e-5):
    d = f.dim
    J = np.zeros((d, d), dtype=complex)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, j] = (f.value_at(p + e) - f.value_at(p - e)) / (2 * h)
    return J


# ----------------------------------------------------------------------
# regularity-gain probe
# ----------------------------------------------------------------------

def regularity_gain_probe(family, config=None):
    """Gain ratios across a family of inputs; boundedness is the claim.

    ``family`` is a list of (name, fields) pairs.  Returns a list of rows
    {name, gamma, input_norm, chart_norm, ratio}.
    """
    config = config or FlattenConfig()
    rows = []
    for name, fields in family:
        res = flatten(fields, config=config)
        nt = res.report.norm_table
        rows.append(
            {
                "name": name,
                "gamma": res.chart.gamma,
                "input_zygmund_s0p1": nt["input_zygmund_s0p1"],
                "chart_zygmund_s0p2": nt["chart_zygmund_s0p2"],
                "ratio": nt["gain_ratio"],
            }
        )
    return rows


# ----------------------------------------------------------------------
# result-bundle serialization
# ----------------------------------------------------------------------

RESULT_VERSION = "frobflat-result-v1"


def result_to_dict(result):
    chart = result.chart
    return {
        "version": RESULT_VERSION,
        "r": result.r,
        "n": result.n,
        "config": result.config.to_dict(),
        "provenance_hash": result.provenance_hash,
        "chart": {
            "phi": map_to_dict(chart.phi),
            "phi_inverse": map_to_dict(chart.phi_inverse),
            "pre_chart": map_to_dict(chart.pre_chart),
            "domain_radius": chart.domain_radius,
            "K2": chart.K2,
            "K1": chart.K1,
            "gamma": chart.gamma,
            "eta": chart.eta,
            "provenance": chart.provenance,
        },
        "A": [[series_to_dict(e) for e in row] for row in result.A],
        "A_norm": result.A_norm,
        "w_normalized": [series_to_dict(w) for w in result.w_normalized],
        "residuals": result.report.to_dict(),
    }


def result_to_json(result):
    return json.dumps(result_to_dict(result), sort_keys=True, separators=(",", ":"))


def result_from_dict(obj):
    if obj.get("version") != RESULT_VERSION:
        raise PreconditionError(
            f"unsupported result version {obj.get('version')!r}; "
            f"expected {RESULT_VERSION!r}"
        )
    from .series import map_from_dict, series_from_dict

    cd = obj["chart"]
    chart = Chart(
        phi=map_from_dict(cd["phi"]),
        phi_inverse=map_from_dict(cd["phi_inverse"]),
        pre_chart=map_from_dict(cd["pre_chart"]),
        domain_radius=cd["domain_radius"],
        K2=cd["K2"],
        K1=cd["K1"],
        gamma=cd["gamma"],
        eta=cd["eta"],
        provenance=cd["provenance"],
    )
    res = obj["residuals"]
    report = ResidualReport(**res)
    return FlattenResult(
        r=obj["r"],
        n=obj["n"],
        chart=chart,
        A=[[series_from_dict(e) for e in row] for row in obj["A"]],
        A_norm=obj["A_norm"],
        report=report,
        w_normalized=[series_from_dict(w) for w in obj["w_normalized"]],
        provenance_hash=obj["provenance_hash"],
        config=FlattenConfig(**obj["config"]),
    )


def result_from_json(text):
    return result_from_dict(json.loads(text))
