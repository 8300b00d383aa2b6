"""Norm estimators: coefficient norms, Zygmund/Holder grids, scalings."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobflat.errors import PreconditionError, ResolutionError
from frobflat.funcspaces import (
    GridField,
    anorm,
    bnorm_estimate,
    gridfield_from_file,
    gridfield_to_file,
    holder_estimate,
    scale_series,
    substitute_scale,
    zygmund_estimate,
)
from frobflat.series import PowerSeries, mul


def random_series(dim, dmax, seed, zero_constant=False):
    rng = np.random.default_rng(seed)
    coeffs = {}
    for _ in range(15):
        alpha = tuple(int(a) for a in rng.integers(0, dmax + 1, dim))
        if sum(alpha) > dmax:
            continue
        if zero_constant and sum(alpha) == 0:
            continue
        coeffs[alpha] = complex(rng.standard_normal(), rng.standard_normal())
    return PowerSeries(dim, dmax, coeffs)


# ----------------------------------------------------------------------
# coefficient norm
# ----------------------------------------------------------------------

class TestAnorm:
    def test_single_variable(self):
        t = PowerSeries.variable(1, 4, 0)
        for s in (0.25, 1.0, 3.0):
            est = anorm(t, s)
            assert est.value == s
            assert est.method == "series-exact"
            assert not est.lower_bound

    def test_truncated_exponential(self):
        f = PowerSeries(1, 8, {(k,): 1.0 / math.factorial(k) for k in range(9)})
        expected = sum(1.0 / math.factorial(k) for k in range(9))
        assert abs(anorm(f, 1.0).value - expected) < 1e-14
        assert abs(anorm(f, 1.0).value - 2.71827877) < 1e-6

    def test_restriction_contraction(self):
        # f(0)=0: anorm(f, eta1) <= (eta1/eta2) anorm(f, eta2)
        for seed in range(10):
            f = random_series(2, 8, seed=seed, zero_constant=True)
            for eta1, eta2 in [(0.25, 0.5), (0.5, 1.0), (0.3, 2.0)]:
                lhs = anorm(f, eta1).value
                rhs = (eta1 / eta2) * anorm(f, eta2).value
                assert lhs <= rhs * (1 + 1e-12)


class TestScaleSeries:
    def test_equality_case_linear(self):
        t = PowerSeries.variable(1, 4, 0)
        fg = scale_series(t, 0.25, D=2.0, eta1=1.0)
        assert abs(anorm(fg, 2.0).value - 0.5) < 1e-14
        # bound (gamma D / eta1) * anorm(f, eta1) = 0.5 is attained
        assert abs(anorm(fg, 2.0).value - 0.5 * anorm(t, 1.0).value) < 1e-14

    def test_quadratic_below_bound(self):
        t2 = PowerSeries(1, 4, {(2,): 1.0})
        fg = scale_series(t2, 0.25, D=2.0, eta1=1.0)
        assert abs(anorm(fg, 2.0).value - 0.25) < 1e-14
        assert anorm(fg, 2.0).value <= 0.5

    def test_gamma_out_of_range(self):
        t = PowerSeries.variable(1, 4, 0)
        with pytest.raises(PreconditionError):
            scale_series(t, 0.75, D=2.0, eta1=1.0)

    def test_scaling_inequality_random(self):
        for seed in range(8):
            f = random_series(2, 8, seed=100 + seed, zero_constant=True)
            eta1, D = 1.0, 2.0
            for gamma in (0.5, 0.25, 0.125):
                fg = scale_series(f, gamma, D=D, eta1=eta1)
                lhs = anorm(fg, D).value
                rhs = (gamma * D / eta1) * anorm(f, eta1).value
                assert lhs <= rhs * (1 + 1e-12)

    def test_zygmund_counterpart(self):
        # grid-estimated scaled norm obeys the gamma (15(D+1)+1) bound
        D, eta1, gamma, s = 1.0, 1.0, 0.25, 1.5
        f = PowerSeries(1, 8, {(1,): 0.3, (2,): 0.2, (3,): -0.1})
        fg = substitute_scale(f, gamma)

        def sample(g, radius, count):
            return GridField.from_function(
                lambda pts: g.evaluate_many(pts).real.reshape(-1, 1),
                radius, (count,),
            )

        lhs = zygmund_estimate(sample(fg, D, 129), s).value
        # dense oracle for the unscaled function
        rhs = gamma * (15 * (D + 1) + 1) * zygmund_estimate(
            sample(f, eta1, 513), s
        ).value
        assert lhs <= rhs


class TestBnorm:
    def test_linear_radius_one(self):
        t = PowerSeries.variable(1, 4, 0)
        est = bnorm_estimate(t, 1.0)
        assert abs(est.value - 1.0) < 1e-12
        assert est.lower_bound

    def test_quadratic_radius_half(self):
        t2 = PowerSeries(1, 4, {(2,): 1.0})
        assert abs(bnorm_estimate(t2, 0.5).value - 0.25) < 1e-12

    def test_bounded_by_anorm(self):
        for seed in range(12):
            f = random_series(2, 4, seed=200 + seed)
            for radius in (0.5, 1.0, 1.5):
                assert (
                    bnorm_estimate(f, radius).value
                    <= anorm(f, radius).value * (1 + 1e-12)
                )


# ----------------------------------------------------------------------
# grid estimators
# ----------------------------------------------------------------------

def grid_from_callable(fn, radius, counts):
    return GridField.from_function(
        lambda pts: np.asarray(fn(pts)).reshape(len(pts), -1), radius, counts
    )


class TestZygmund:
    def test_constant(self):
        gf = grid_from_callable(lambda p: np.full(len(p), 2.5), 1.0, (65,))
        est = zygmund_estimate(gf, 1.0)
        assert abs(est.value - 2.5) < 1e-12

    def test_linear_oracle(self):
        # f(x) = x on B^1(1), s=1: sup 1, Holder-1/2 seminorm sqrt(2),
        # second differences vanish -> 1 + sqrt(2), approached from below
        gf = grid_from_callable(lambda p: p[:, 0], 1.0, (257,))
        est = zygmund_estimate(gf, 1.0)
        assert est.value <= 1 + math.sqrt(2) + 1e-12
        assert est.value > (1 + math.sqrt(2)) * 0.995
        assert est.lower_bound

    def test_quadratic_within_two_percent_of_dense_oracle(self):
        fn = lambda p: p[:, 0] ** 2
        coarse = zygmund_estimate(grid_from_callable(fn, 1.0, (129,)), 2.0)
        dense = zygmund_estimate(grid_from_callable(fn, 1.0, (1025,)), 2.0)
        assert coarse.value <= dense.value * (1 + 1e-12)
        assert abs(coarse.value - dense.value) / dense.value < 0.02

    def test_monotone_under_refinement(self):
        fn = lambda p: np.sin(2 * p[:, 0])
        prev = 0.0
        for count in (33, 65, 129):
            est = zygmund_estimate(grid_from_callable(fn, 1.0, (count,)), 0.5)
            assert est.value >= prev * (1 - 1e-12)
            prev = est.value

    def test_zero_function_invariance(self):
        fn = lambda p: np.cos(p[:, 0])
        a = zygmund_estimate(grid_from_callable(fn, 1.0, (65,)), 1.0)
        b = zygmund_estimate(
            grid_from_callable(lambda p: fn(p) + 0.0, 1.0, (65,)), 1.0
        )
        assert a.value == b.value

    def test_insufficient_resolution(self):
        with pytest.raises(ResolutionError):
            GridField.from_function(lambda p: p[:, 0], 1.0, (2,))


class TestHolder:
    def test_constant(self):
        gf = grid_from_callable(lambda p: np.full(len(p), -1.5), 1.0, (65,))
        assert abs(holder_estimate(gf, 0, 1.0).value - 1.5) < 1e-12

    def test_linear_lipschitz(self):
        gf = grid_from_callable(lambda p: p[:, 0], 1.0, (257,))
        est = holder_estimate(gf, 0, 1.0)
        assert abs(est.value - 2.0) < 0.02
        assert est.value <= 2.0 + 1e-12

    def test_comparison_chain(self):
        # || g ||_{C^s} <= 5 ||g||_{C^{0,s}} <= 15 ||g||_{C^{0,1}} <= 15 ||g||_{C^1}
        fn = lambda p: np.sin(2 * p[:, 0]) + 0.3 * p[:, 0] ** 2
        gf = grid_from_callable(fn, 1.0, (129,))
        s = 0.5
        zyg = zygmund_estimate(gf, s)
        h0s = holder_estimate(gf, 0, s)
        h01 = holder_estimate(gf, 0, 1.0)
        assert zyg.value <= 5 * h0s.value * (1 + 1e-9)
        assert 5 * h0s.value <= 15 * h01.value * (1 + 1e-9)


class TestGridFieldFile:
    def test_round_trip(self, tmp_path):
        gf = grid_from_callable(
            lambda p: np.stack([p[:, 0] + 1j * p[:, 1], p[:, 1] ** 2], axis=-1),
            0.8,
            (9, 9),
        )
        path = tmp_path / "field.bin"
        gridfield_to_file(gf, path)
        back = gridfield_from_file(path)
        assert back.radius == gf.radius
        assert back.counts == gf.counts
        assert np.array_equal(back.values, gf.values)


# ----------------------------------------------------------------------
# properties
# ----------------------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 0.5, 1.0, 2.0]))
@settings(max_examples=40, deadline=None)
def test_anorm_triangle_inequality(seed, radius):
    f = random_series(2, 6, seed=seed)
    g = random_series(2, 6, seed=seed + 1)
    assert (
        anorm(f + g, radius).value
        <= anorm(f, radius).value + anorm(g, radius).value + 1e-12
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_restriction_property(seed):
    f = random_series(3, 6, seed=seed, zero_constant=True)
    eta2 = 1.7
    for eta1 in (0.1, 0.8, 1.3):
        assert (
            anorm(f, eta1).value
            <= (eta1 / eta2) * anorm(f, eta2).value * (1 + 1e-12) + 1e-12
        )
