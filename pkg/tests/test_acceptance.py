"""Acceptance gate: the package-level guarantees at their stated tolerances."""

import json
import time

import numpy as np
import pytest

from frobflat.cli import main
from frobflat.elliptic import (
    EllipticOperator,
    EllipticProblem,
    SMALL_DATA_THRESHOLD,
    contraction_solve,
)
from frobflat.fieldspec import FieldSpec, parse_fields
from frobflat.frames import VectorField, ball_probes, pushforward
from frobflat.funcspaces import anorm, scale_series
from frobflat.pipeline import FlattenConfig, flatten, verify_chart
from frobflat.series import PowerSeries, SeriesMap, differentiate, mul


def random_series(dim, dmax, rng, nterms=12, zero_constant=False):
    coeffs = {}
    for _ in range(nterms):
        alpha = tuple(int(a) for a in rng.integers(0, dmax + 1, dim))
        if sum(alpha) > dmax or (zero_constant and sum(alpha) == 0):
            continue
        coeffs[alpha] = complex(rng.standard_normal(), rng.standard_normal())
    return PowerSeries(dim, dmax, coeffs)


# ----------------------------------------------------------------------
# 1. exact coefficient-norm inequalities on 200 seeded random series
# ----------------------------------------------------------------------

def test_function_space_inequalities_bulk():
    start = time.monotonic()
    rng = np.random.default_rng(42)
    rel = 1e-12
    for case in range(200):
        dim = int(rng.integers(1, 5))
        dmax = 8
        f = random_series(dim, dmax, rng, zero_constant=True)
        g = random_series(dim, dmax, rng, zero_constant=True)
        radius = float(rng.uniform(0.2, 2.0))

        # submultiplicativity
        lhs = anorm(mul(f, g), radius).value
        rhs = anorm(f, radius).value * anorm(g, radius).value
        assert lhs <= rhs * (1 + rel)

        # restriction factor eta1/eta2 for f(0)=0
        eta2 = float(rng.uniform(0.5, 2.0))
        eta1 = eta2 * float(rng.uniform(0.1, 0.99))
        assert (
            anorm(f, eta1).value
            <= (eta1 / eta2) * anorm(f, eta2).value * (1 + rel) + 1e-15
        )

        # scaling factor gamma D / eta1
        D = float(rng.uniform(0.5, 2.0))
        gamma = float(rng.uniform(0.05, 0.5)) * min(1.0, eta2 / D)
        fg = scale_series(f, gamma, D=D, eta1=eta2)
        assert (
            anorm(fg, D).value
            <= (gamma * D / eta2) * anorm(f, eta2).value * (1 + rel) + 1e-15
        )

        # derivative bound: ||d_1 f||_{A,eta2'} <= C ||f||_{A,eta1'} with
        # C = sup_alpha (eta2'/eta1')^{|alpha|} alpha_1 / eta1'
        eta1p = float(rng.uniform(0.3, 1.0))
        eta2p = eta1p * float(rng.uniform(1.01, 2.0))
        C = max(
            (eta2p / eta1p) ** k * k / eta1p for k in range(1, dmax + 1)
        )
        df = differentiate(f, 0)
        assert (
            anorm(df, eta2p).value
            <= C * anorm(f, eta1p).value * (1 + rel) + 1e-15
        )
    assert time.monotonic() - start < 10.0


# ----------------------------------------------------------------------
# 2. elliptic operator identities
# ----------------------------------------------------------------------

def test_elliptic_identities():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    for (r, n) in [(0, 1), (1, 1), (2, 0), (2, 1)]:
        d = r + 2 * n
        counts = (12,) * d if d <= 3 else (6,) * d
        op = EllipticOperator(r, n, counts)

        # symbol least-singular-value positive across the working band
        assert op.ellipticity_certificate() > 0

        # E*E on trig polynomials against the per-mode analytic Laplacian
        grids = np.meshgrid(
            *[np.linspace(-np.pi, np.pi, c, endpoint=False) for c in counts],
            indexing="ij",
        )
        U = np.zeros((op.m1,) + counts, dtype=complex)
        rhs = np.zeros_like(U)
        band = counts[0] // 2 - 1
        for _ in range(8):
            comp = int(rng.integers(0, op.m1))
            freq = rng.integers(-band, band + 1, d)
            amp = complex(rng.standard_normal(), rng.standard_normal())
            mode = amp * np.exp(1j * sum(f * g for f, g in zip(freq, grids)))
            # -(sum d^2/dt^2 + sum d_z d_zbar) multiplies this mode by
            # |kappa_t|^2 + |kappa_{x,y}|^2 / 4
            mult = float(np.sum(freq[:r] ** 2) + 0.25 * np.sum(freq[r:] ** 2))
            U[comp] += mode
            rhs[comp] += mult * mode
        got = op.apply_normal(U)
        scale = max(1.0, np.max(np.abs(rhs)))
        assert np.max(np.abs(got - rhs)) < 1e-12 * scale

        # E*E . P = identity minus mean
        V = np.zeros_like(U)
        for comp in range(op.m1):
            for _ in range(3):
                freq = rng.integers(-band, band + 1, d)
                amp = complex(rng.standard_normal(), rng.standard_normal())
                V[comp] += amp * np.exp(1j * sum(f * g for f, g in zip(freq, grids)))
        back = op.apply_normal(op.solve_P(V))
        mean = V.mean(axis=tuple(range(1, d + 1)), keepdims=True)
        scale = max(1.0, np.max(np.abs(V)))
        assert np.max(np.abs(back - (V - mean))) < 1e-10 * scale
    assert time.monotonic() - start < 30.0


# ----------------------------------------------------------------------
# 3. contraction behavior
# ----------------------------------------------------------------------

def test_contraction_rate_and_uniqueness():
    op = EllipticOperator(0, 1, (16, 16))

    def gamma(U, gradU):
        W = np.zeros((op.m2,) + op.counts, dtype=complex)
        W[0] = 0.25 * U[0] * gradU[0, 0]
        return W

    prob = EllipticProblem(op=op, gamma=gamma)
    grids = np.meshgrid(
        *[np.linspace(-np.pi, np.pi, 16, endpoint=False)] * 2, indexing="ij"
    )
    for seed in (1, 2, 3, 4, 5):
        rng = np.random.default_rng(seed)
        H = np.zeros((op.m1, 16, 16), dtype=complex)
        for _ in range(3):
            freq = rng.integers(-3, 4, 2)
            amp = complex(rng.standard_normal(), rng.standard_normal())
            H[0] += amp * np.exp(1j * (freq[0] * grids[0] + freq[1] * grids[1]))
        H *= 0.5 * SMALL_DATA_THRESHOLD / np.max(np.abs(H))
        res = contraction_solve(prob, H)
        early = res.ratios[: min(3, len(res.ratios))]
        assert early and min(early) <= 0.5

        V0 = 0.01 * (
            rng.standard_normal(H.shape) + 1j * rng.standard_normal(H.shape)
        )
        res2 = contraction_solve(prob, H, V0=V0)
        assert np.max(np.abs(res.fixed_point - res2.fixed_point)) < 1e-8


# ----------------------------------------------------------------------
# 4. flat-model exactness
# ----------------------------------------------------------------------

def test_flat_model_exactness():
    start = time.monotonic()
    fields = [VectorField.model(1, 1, 8, k) for k in range(2)]
    result = flatten(fields)
    gamma = result.chart.gamma
    for k, comp in enumerate(result.chart.phi.components):
        for alpha, value in comp.coeffs.items():
            unit = tuple(1 if i == k else 0 for i in range(3))
            assert value == (gamma if alpha == unit else 0.0)
    assert all(c.is_zero() for row in result.A for c in row)
    rep = result.report
    assert rep.span_residual < 1e-12
    assert rep.commutator_residual < 1e-12
    assert rep.relation_residual < 1e-12
    assert rep.annihilation_residual < 1e-12
    assert time.monotonic() - start < 1.0


# ----------------------------------------------------------------------
# 5. Beltrami oracle agreement
# ----------------------------------------------------------------------

def picard_beltrami_oracle(eps, dmax):
    """First integral of d/dzbar + eps*zbar d/dz by Picard iteration.

    Works on monomial tables {(a, b): coeff} for z^a zbar^b.  The update is
    w <- z - T[eps * zbar * dw/dz] where T is the exact right inverse of
    d/dzbar on monomials.
    """
    w = {(1, 0): 1.0}
    for _ in range(dmax + 2):
        new = {(1, 0): 1.0}
        for (a, b), c in w.items():
            if a == 0:
                continue
            # eps * zbar * d/dz (z^a zbar^b) = eps a z^{a-1} zbar^{b+1}
            # T: z^p zbar^q -> z^p zbar^{q+1} / (q+1)
            key = (a - 1, b + 2)
            if sum(key) <= dmax:
                new[key] = new.get(key, 0.0) - eps * a * c / (b + 2)
        if all(abs(new.get(k, 0.0) - v) < 1e-15 for k, v in w.items()) and len(
            new
        ) == len(w):
            w = new
            break
        w = new
    return w


def test_beltrami_against_picard_oracle():
    start = time.monotonic()
    spec = FieldSpec(0, 1, dmax=8)
    fields = parse_fields(["dzb1 + 0.1*zb1*dz1"], spec)
    result = flatten(fields)
    assert result.report.span_residual < 1e-7

    oracle = picard_beltrami_oracle(0.1, 8)
    w = result.w_normalized[0]
    radius = result.chart.eta["eta3"] / 2.0
    pts = ball_probes(2, radius, count=128, seed=11)
    worst = 0.0
    for p in pts:
        z = p[0] + 1j * p[1]
        ours = w.evaluate(p)
        ref = sum(c * z**a * np.conj(z) ** b for (a, b), c in oracle.items())
        worst = max(worst, abs(ours - ref))
    assert worst < 1e-6
    assert time.monotonic() - start < 60.0


# ----------------------------------------------------------------------
# 6. manufactured-diffeomorphism recovery
# ----------------------------------------------------------------------

def manufactured_fields(r, n, seed, dmax=8, size=0.05):
    """Model frame pushed through a seeded degree-3 polynomial diffeo."""
    d = r + 2 * n
    rng = np.random.default_rng(seed)
    comps = []
    for k in range(d):
        coeffs = {tuple(1 if i == k else 0 for i in range(d)): 1.0}
        for _ in range(4):
            alpha = tuple(int(a) for a in rng.integers(0, 4, d))
            if 2 <= sum(alpha) <= 3:
                coeffs[alpha] = coeffs.get(alpha, 0.0) + size * rng.standard_normal()
        comps.append(PowerSeries(d, dmax, coeffs))
    phi = SeriesMap(comps)
    model = [VectorField.model(r, n, dmax, k) for k in range(r + n)]
    return [pushforward(phi, V) for V in model]


@pytest.fixture(scope="module")
def manufactured_results():
    out = {}
    start = time.monotonic()
    for i, (r, n) in enumerate([(1, 0), (2, 0), (0, 1), (1, 1)]):
        fields = manufactured_fields(r, n, seed=90 + i)
        out[(r, n)] = (fields, flatten(fields))
    assert time.monotonic() - start < 300.0
    return out


def test_manufactured_recovery(manufactured_results):
    for (r, n), (fields, result) in manufactured_results.items():
        rep = result.report
        assert rep.probe_count == 64
        assert rep.span_residual < 1e-6, (r, n)
        assert rep.commutator_residual < 1e-6, (r, n)
        d = r + 2 * n
        inv_K2 = 1.0 / result.chart.K2
        for k, comp in enumerate(result.chart.phi.components):
            assert comp.at_zero() == 0
            for i in range(d):
                unit = tuple(1 if j == i else 0 for j in range(d))
                assert comp.coefficient(unit) == (inv_K2 if i == k else 0.0)


# ----------------------------------------------------------------------
# 7. structural relation by independent finite differences
# ----------------------------------------------------------------------

def test_relation_reconstruction(manufactured_results):
    cases = [(fields, result) for fields, result in manufactured_results.values()]
    spec = FieldSpec(0, 1, dmax=8)
    beltrami = parse_fields(["dzb1 + 0.1*zb1*dz1"], spec)
    cases.append((beltrami, flatten(beltrami)))
    for fields, result in cases:
        assert result.A_norm <= 0.25
        rep = verify_chart(fields, result)
        assert rep.method == "finite-difference"
        assert rep.relation_residual < 1e-6


# ----------------------------------------------------------------------
# 8. regularity-gain boundedness across the benchmark corpus
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def bench_dirs(tmp_path_factory):
    out1 = tmp_path_factory.mktemp("bench1")
    out2 = tmp_path_factory.mktemp("bench2")
    assert main(["bench", "--out", str(out1), "--seed", "0"]) == 0
    assert main(["bench", "--out", str(out2), "--seed", "0"]) == 0
    return out1, out2


def test_regularity_gain_bounded(bench_dirs):
    doc = json.loads((bench_dirs[0] / "bench.json").read_text())
    ratios = [row["ratio"] for row in doc["rows"]]
    median = doc["median_ratio"]
    assert median > 0
    for x in ratios:
        assert x <= 2.0 * median
        assert x >= median / 2.0
    assert doc["max_over_median"] <= 2.0


# ----------------------------------------------------------------------
# 9. benchmark determinism
# ----------------------------------------------------------------------

def test_bench_deterministic(bench_dirs):
    out1, out2 = bench_dirs
    for name in ("bench.json", "regularity.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
