"""Vector fields and frames: brackets, pullbacks, normalization, reduction."""

import numpy as np
import pytest

from frobflat.errors import PreconditionError, ShapeError
from frobflat.frames import (
    Frame,
    VectorField,
    ball_probes,
    check_structure,
    commutator,
    frame_from_dict,
    frame_to_dict,
    point_normalize,
    pullback,
    pushforward,
    real_basis,
    reduce_to_EF,
    scale_frame,
)
from frobflat.funcspaces import anorm
from frobflat.series import PowerSeries, SeriesMap, mul, smat_mul


def coeffs_equal(f, g, tol=1e-12):
    diff = f - g
    return max((abs(v) for v in diff.coeffs.values()), default=0.0) <= tol


def fields_equal(V, W, tol=1e-12):
    return all(coeffs_equal(a, b, tol) for a, b in zip(V.comps, W.comps))


# ----------------------------------------------------------------------
# commutators
# ----------------------------------------------------------------------

class TestCommutator:
    def test_constant_fields_commute(self):
        r, n, dmax = 1, 1, 6
        X = VectorField.model(r, n, dmax, 0)
        L = VectorField.model(r, n, dmax, 1)
        assert all(c.is_zero() for c in commutator(X, L).comps)

    def test_dt_with_t_dz(self):
        # [d/dt, t d/dz] = d/dz
        r, n, dmax = 1, 1, 6
        d = r + 2 * n
        X = VectorField.model(r, n, dmax, 0)
        comps = [PowerSeries.zero(d, dmax) for _ in range(d)]
        comps[1] = PowerSeries.variable(d, dmax, 0)
        W = VectorField(r, n, comps)
        br = commutator(X, W)
        assert coeffs_equal(br.comps[1], PowerSeries.constant(d, dmax - 1, 1.0))
        assert br.comps[0].is_zero() and br.comps[2].is_zero()

    def test_matches_flow_bracket_oracle(self):
        # finite-difference flow commutator (d/ds d/du)|0 at sample points
        from frobflat.flows import exp_flow

        r, n, dmax = 1, 1, 8
        d = r + 2 * n
        rng = np.random.default_rng(4)

        def affine_field(seed):
            rg = np.random.default_rng(seed)
            comps = []
            for _ in range(d):
                c = PowerSeries.constant(d, dmax, complex(rg.standard_normal()))
                for j in range(d):
                    c = c + PowerSeries.variable(d, dmax, j).scale(
                        0.3 * rg.standard_normal()
                    )
                comps.append(c)
            return VectorField(r, n, comps)

        V, W = affine_field(1), affine_field(2)
        br = commutator(V, W)
        h = 1e-4
        flowV = exp_flow(V).map
        flowW = exp_flow(W).map
        for p in rng.uniform(-0.3, 0.3, size=(5, d)):
            def fl(flow, s, q):
                return flow.evaluate(np.concatenate([[s], q]))

            def bracket_fd(step):
                ab = fl(flowW, step, fl(flowV, step, p.astype(complex)))
                ba = fl(flowV, step, fl(flowW, step, p.astype(complex)))
                return (ab - ba) / step**2

            # Richardson extrapolation kills the O(h) term of the estimate
            oracle = 2 * bracket_fd(h / 2) - bracket_fd(h)
            assert np.max(np.abs(oracle - br.value_at(p))) < 1e-6

    def test_antisymmetric_bilinear(self):
        r, n, dmax = 0, 1, 6
        d = 2
        rng = np.random.default_rng(9)

        def rand_field(seed):
            rg = np.random.default_rng(seed)
            comps = []
            for _ in range(d):
                coeffs = {}
                for _ in range(5):
                    alpha = tuple(int(a) for a in rg.integers(0, 3, d))
                    coeffs[alpha] = complex(rg.standard_normal())
                comps.append(PowerSeries(d, dmax, coeffs))
            return VectorField(r, n, comps)

        V, W, U = rand_field(1), rand_field(2), rand_field(3)
        assert fields_equal(commutator(V, W), commutator(W, V).scale(-1.0))
        lhs = commutator(V + W, U)
        rhs = commutator(V, U) + commutator(W, U)
        assert fields_equal(lhs, rhs, tol=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            commutator(
                VectorField.model(1, 0, 4, 0), VectorField.model(0, 1, 4, 0)
            )


# ----------------------------------------------------------------------
# pullback
# ----------------------------------------------------------------------

class TestPullback:
    def test_identity_chart(self):
        Z = VectorField.model(1, 1, 6, 1)
        phi = SeriesMap.identity(3, 6)
        assert fields_equal(pullback(phi, Z), Z)

    def test_gamma_scaling_consistency(self):
        # gamma * (Psi_gamma)^* (d/dt) = d/dt
        gamma = 0.25
        d, dmax = 3, 6
        phi = SeriesMap(
            [PowerSeries.variable(d, dmax, i).scale(gamma) for i in range(d)]
        )
        X = VectorField.model(1, 1, dmax, 0)
        pulled = pullback(phi, X)
        assert fields_equal(pulled.scale(gamma), X)

    def test_pushforward_pullback_round_trip(self):
        r, n, dmax = 1, 1, 6
        d = 3
        comps = []
        for i in range(d):
            c = PowerSeries.variable(d, dmax, i)
            c = c + PowerSeries(d, dmax, {(0, 2, 0): 0.05 * (i + 1)})
            comps.append(c)
        phi = SeriesMap(comps)
        Z = VectorField.model(r, n, dmax, 0)
        pushed = pushforward(phi, Z)
        back = pullback(phi, pushed)
        for a, b in zip(back.comps, Z.comps):
            trimmed = PowerSeries(
                d, dmax, {al: v for al, v in (a - b).coeffs.items()
                          if sum(al) <= dmax - 1}
            )
            assert max((abs(v) for v in trimmed.coeffs.values()), default=0.0) < 1e-9

    def test_respects_composition(self):
        d, dmax = 2, 6
        q = PowerSeries(d, dmax, {(2, 0): 0.1})
        phi1 = SeriesMap([PowerSeries.variable(d, dmax, 0) + q,
                          PowerSeries.variable(d, dmax, 1)])
        phi2 = SeriesMap([PowerSeries.variable(d, dmax, 0),
                          PowerSeries.variable(d, dmax, 1).scale(0.5)])
        Z = VectorField.model(0, 1, dmax, 0)
        lhs = pullback(phi1.compose(phi2), Z)
        rhs = pullback(phi2, pullback(phi1, Z))
        for a, b in zip(lhs.comps, rhs.comps):
            trimmed = {al: v for al, v in (a - b).coeffs.items()
                       if sum(al) <= dmax - 1}
            assert max((abs(v) for v in trimmed.values()), default=0.0) < 1e-9


# ----------------------------------------------------------------------
# structure checking
# ----------------------------------------------------------------------

class TestCheckStructure:
    def test_flat_model_r1_n1(self):
        fields = [VectorField.model(1, 1, 6, i) for i in range(2)]
        probes = ball_probes(3, 0.5, 16, seed=0)
        rep = check_structure(fields, probes)
        assert rep.ok
        assert set(rep.span_dims) == {2}
        assert set(rep.sum_dims) == {3}
        assert set(rep.intersection_dims) == {1}
        # dim formula: dim(L + Lbar) + dim(L cap Lbar) = 2 dim L
        assert 3 + 1 == 2 * 2

    def test_single_dzbar(self):
        fields = [VectorField.model(0, 1, 6, 0)]
        probes = ball_probes(2, 0.5, 8, seed=1)
        rep = check_structure(fields, probes)
        assert rep.ok
        assert set(rep.intersection_dims) == {0}

    def test_non_integrable_flagged(self):
        # L = dzb1 + zb2 dz1 in C^2 without its partner: bracket leaves the span
        r, n, dmax = 0, 2, 6
        d = 4
        comps = [PowerSeries.zero(d, dmax) for _ in range(d)]
        comps[2] = PowerSeries.constant(d, dmax, 1.0)  # dzb_1
        w = PowerSeries.variable(d, dmax, 1) + PowerSeries.variable(d, dmax, 3).scale(-1j)
        comps[0] = w  # zb2 dz_1
        L1 = VectorField(r, n, comps)
        L2 = VectorField.model(r, n, dmax, 1)
        probes = ball_probes(4, 0.5, 8, seed=2)
        rep = check_structure([L1, L2], probes)
        assert not rep.checks["integrable"]
        assert max(rep.commutator_residuals) > 1e-3

    def test_wrong_field_count(self):
        fields = [VectorField.model(1, 1, 6, 0)]
        probes = ball_probes(3, 0.5, 8, seed=0)
        rep = check_structure(fields, probes)
        assert not rep.ok


class TestRealBasis:
    def test_conjugate_pair(self):
        vs = [np.array([1.0, 1j]), np.array([1.0, -1j])]
        basis = real_basis(vs)
        B = np.array(basis)
        assert np.max(np.abs(B.imag)) < 1e-12
        # spans the same plane as {(1,0),(0,1)}
        assert np.linalg.matrix_rank(B.real) == 2

    def test_already_real(self):
        vs = [np.array([1.0, 0.0]), np.array([0.0, 2.0])]
        basis = real_basis(vs)
        B = np.array(basis)
        assert np.linalg.matrix_rank(np.vstack([B, np.array(vs)])) == 2

    def test_not_conjugation_closed(self):
        with pytest.raises(PreconditionError):
            real_basis([np.array([1.0, 1j])])


# ----------------------------------------------------------------------
# point normalization
# ----------------------------------------------------------------------

class TestPointNormalize:
    def test_already_normalized(self):
        fields = [VectorField.model(1, 1, 6, i) for i in range(2)]
        chart, recomb, out = point_normalize(fields, np.zeros(3))
        assert np.max(np.abs(chart.linear_matrix() - np.eye(3))) < 1e-12
        assert np.max(np.abs(chart.value_at_zero())) < 1e-12
        for f, m in zip(out, fields):
            assert np.max(np.abs(f.value_at(np.zeros(3)) - m.value_at(np.zeros(3)))) < 1e-12

    def test_rescaled_antiholomorphic(self):
        # L(0) = 2 dzb -> recombination 1/2, chart linear part identity
        L = VectorField.model(0, 1, 6, 0).scale(2.0)
        chart, recomb, out = point_normalize([L], np.zeros(2))
        assert abs(recomb[0, 0] - 0.5) < 1e-12
        model = VectorField.model(0, 1, 6, 0)
        assert np.max(np.abs(out[0].value_at(np.zeros(2)) - model.value_at(np.zeros(2)))) < 1e-12

    def test_affine_round_trip(self):
        # push the model through a known affine map, recover model values at 0
        r, n, dmax = 1, 1, 6
        d = 3
        rng = np.random.default_rng(12)
        A = np.eye(d) + 0.2 * rng.standard_normal((d, d))
        model = [VectorField.model(r, n, dmax, i) for i in range(2)]
        phi = SeriesMap([
            sum(
                (PowerSeries.variable(d, dmax, j).scale(A[i, j]) for j in range(d)),
                PowerSeries.zero(d, dmax),
            )
            for i in range(d)
        ])
        fields = [pushforward(phi, m) for m in model]
        chart, recomb, out = point_normalize(fields, np.zeros(d))
        for f, m in zip(out, model):
            assert np.max(np.abs(f.value_at(np.zeros(d)) - m.value_at(np.zeros(d)))) < 1e-12


# ----------------------------------------------------------------------
# frame reduction and scaling
# ----------------------------------------------------------------------

def small_block(rows, cols, d, dmax, seed, scale=0.05):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            coeffs = {}
            for _ in range(4):
                alpha = tuple(int(a) for a in rng.integers(0, 3, d))
                if 1 <= sum(alpha) <= dmax:
                    coeffs[alpha] = scale * complex(rng.standard_normal())
            row.append(PowerSeries(d, dmax, coeffs))
        out.append(row)
    return out


class TestReduceToEF:
    def test_already_reduced(self):
        r, n, dmax = 1, 1, 6
        d = 3
        z = lambda: [[PowerSeries.zero(d, dmax)]]
        E = small_block(1, 1, d, dmax, seed=5)
        F = small_block(1, 1, d, dmax, seed=6)
        frame = Frame(r, n, A=z(), B=E, C=z(), D=F, E=z(), F=z())
        reduced, multiplier, eta0 = reduce_to_EF(frame)
        assert coeffs_equal(reduced.B[0][0], E[0][0])
        assert coeffs_equal(reduced.D[0][0], F[0][0])
        assert eta0 == 1.0

    def test_nilpotent_closed_form(self):
        # M = [[0, t*c],[0, 0]] has M^2 = 0, so (I+M)^{-1} = I - M
        r, n, dmax = 1, 1, 6
        d = 3
        c = 0.3
        z = lambda: [[PowerSeries.zero(d, dmax)]]
        E = [[PowerSeries.variable(d, dmax, 0).scale(c)]]  # block coupling X to dzb
        frame = Frame(r, n, A=z(), B=z(), C=z(), D=z(), E=E, F=z())
        reduced, multiplier, eta0 = reduce_to_EF(frame)
        # reduced fields: (I - M)[X; L]; with B = D = 0 the dz blocks stay 0
        assert reduced.B[0][0].is_zero()
        assert reduced.D[0][0].is_zero()

    def test_inverse_residual(self):
        r, n, dmax = 1, 1, 8
        d = 3
        frame = Frame(
            r, n,
            A=small_block(1, 1, d, dmax, seed=21),
            B=small_block(1, 1, d, dmax, seed=22),
            C=small_block(1, 1, d, dmax, seed=23),
            D=small_block(1, 1, d, dmax, seed=24),
            E=small_block(1, 1, d, dmax, seed=25),
            F=small_block(1, 1, d, dmax, seed=26),
        )
        M = frame.perturbation_matrix()
        reduced, multiplier, eta0 = reduce_to_EF(frame)
        m = r + n
        ident = [
            [PowerSeries.constant(d, dmax, 1.0 if i == j else 0.0) for j in range(m)]
            for i in range(m)
        ]
        IM = [[ident[i][j] + M[i][j] for j in range(m)] for i in range(m)]
        prod = smat_mul(IM, multiplier)
        for i in range(m):
            for j in range(m):
                assert coeffs_equal(prod[i][j], ident[i][j], tol=1e-10)

    def test_span_preserved_at_probes(self):
        r, n, dmax = 1, 1, 8
        d = 3
        frame = Frame(
            r, n,
            A=small_block(1, 1, d, dmax, seed=31),
            B=small_block(1, 1, d, dmax, seed=32),
            C=small_block(1, 1, d, dmax, seed=33),
            D=small_block(1, 1, d, dmax, seed=34),
            E=small_block(1, 1, d, dmax, seed=35),
            F=small_block(1, 1, d, dmax, seed=36),
        )
        reduced, _, eta0 = reduce_to_EF(frame)
        before = frame.fields()
        after = reduced.fields()
        for p in ball_probes(d, eta0 / 4, 8, seed=3):
            Vb = np.array([f.value_at(p) for f in before])
            Va = np.array([f.value_at(p) for f in after])
            stacked = np.vstack([Vb, Va])
            s = np.linalg.svd(stacked, compute_uv=False)
            assert s[2] / s[0] < 1e-10  # rank stays 2


class TestScaleFrame:
    def _reduced_frame(self, E00):
        r, n, dmax = 1, 1, 6
        d = 3
        z = lambda: [[PowerSeries.zero(d, dmax)]]
        return Frame(r, n, A=z(), B=[[E00]], C=z(), D=z(), E=z(), F=z())

    def test_linear_block(self):
        d, dmax = 3, 6
        zvar = PowerSeries.variable(d, dmax, 1) + PowerSeries.variable(d, dmax, 2).scale(1j)
        frame = self._reduced_frame(zvar)
        scaled = scale_frame(frame, 0.25, eta0=1.0)
        assert coeffs_equal(scaled.B[0][0], zvar.scale(0.25))

    def test_zero_block(self):
        d, dmax = 3, 6
        frame = self._reduced_frame(PowerSeries.zero(d, dmax))
        for gamma in (0.5, 0.25, 0.125):
            assert scale_frame(frame, gamma, eta0=1.0).B[0][0].is_zero()

    def test_scaling_inequality(self):
        d, dmax = 3, 6
        rng = np.random.default_rng(41)
        coeffs = {}
        for _ in range(6):
            alpha = tuple(int(a) for a in rng.integers(0, 3, d))
            if 1 <= sum(alpha) <= dmax:
                coeffs[alpha] = 0.1 * complex(rng.standard_normal())
        E00 = PowerSeries(d, dmax, coeffs)
        frame = self._reduced_frame(E00)
        eta0 = 1.0
        for gamma in (0.5, 0.25, 0.125):
            scaled = scale_frame(frame, gamma, eta0)
            lhs = anorm(scaled.B[0][0], 2.0).value
            rhs = (2 * gamma / eta0) * anorm(E00, eta0).value
            assert lhs <= rhs * (1 + 1e-12)

    def test_gamma_out_of_range(self):
        d, dmax = 3, 6
        frame = self._reduced_frame(PowerSeries.zero(d, dmax))
        with pytest.raises(PreconditionError):
            scale_frame(frame, 0.75, eta0=1.0)


class TestFrameSerialization:
    def test_round_trip(self):
        r, n, dmax = 1, 1, 5
        d = 3
        frame = Frame(
            r, n,
            A=small_block(1, 1, d, dmax, seed=51),
            B=small_block(1, 1, d, dmax, seed=52),
            C=small_block(1, 1, d, dmax, seed=53),
            D=small_block(1, 1, d, dmax, seed=54),
            E=small_block(1, 1, d, dmax, seed=55),
            F=small_block(1, 1, d, dmax, seed=56),
        )
        back = frame_from_dict(frame_to_dict(frame))
        for name in "ABCDEF":
            blk = getattr(frame, name)
            blk2 = getattr(back, name)
            for row, row2 in zip(blk, blk2):
                for e, e2 in zip(row, row2):
                    assert e.coeffs == e2.coeffs
