import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobolev_action import (
    ConfigurationError,
    DiscreteField,
    InvariantViolation,
    SobolevIndex,
    SobolevIndexError,
    UnsupportedExponentError,
    constant_field,
    integrate,
    make_grid,
    multilinear_product,
    norm_power,
    norm_power_gradient,
    sobolev_norm,
    spectral_gradient,
    synth_field,
)
from sobolev_action.fields import inner, lowpass, torus_interpolate, torus_shift

# norm_power(sin x1, k=0, p=4) frozen from the N=256 quadrature oracle
GOLDEN_SIN4 = 14.804406601634039
# norm_power(synth_field(5, seed=7, N=256, 2 components), k=2, p=4) at N=256
GOLDEN_SYNTH_K2P4 = 158.3584215100575


def sin_field(grid):
    x1, _ = grid.coords()
    return DiscreteField(grid, np.sin(x1))


class TestGrid:
    @pytest.mark.parametrize("n, nodes", [(64, 4096), (16, 256)])
    def test_node_count(self, n, nodes):
        g = make_grid("torus", n)
        assert g.node_count == nodes
        assert g.spacing == pytest.approx(2 * math.pi / n, rel=1e-15)

    @pytest.mark.parametrize("n", [17, 8, 0, 48, -16])
    def test_rejects_bad_resolution(self, n):
        with pytest.raises(ConfigurationError):
            make_grid("torus", n)

    def test_rejects_unknown_domain(self):
        with pytest.raises(ConfigurationError):
            make_grid("klein-bottle", 64)

    @pytest.mark.parametrize("domain", ["torus", "sphere"])
    @pytest.mark.parametrize("n", [16, 32, 64, 128])
    def test_measure_consistency(self, domain, n):
        g = make_grid(domain, n)
        if g.is_torus:
            assert g.cell_measure * g.node_count == pytest.approx(g.measure, rel=1e-12)
        else:
            # round-metric quadrature of the blended atlas converges to 4 pi
            assert np.sum(g.weights) == pytest.approx(4 * math.pi, rel=0.05 if n < 64 else 1e-4)


class TestDiscreteField:
    def test_values_shape_and_readonly(self, torus32):
        f = DiscreteField(torus32, np.zeros((32, 32)))
        assert f.values.shape == (32, 32, 1)
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 1.0

    def test_rejects_nonfinite(self, torus32):
        bad = np.zeros((32, 32))
        bad[3, 4] = np.nan
        with pytest.raises(InvariantViolation):
            DiscreteField(torus32, bad)

    def test_rejects_wrong_length(self, torus32):
        with pytest.raises(ValueError):
            DiscreteField(torus32, np.zeros((16, 16, 1)))

    def test_grid_mismatch(self, torus32, torus64):
        with pytest.raises(ValueError):
            constant_field(torus32, [1.0]) + constant_field(torus64, [1.0])


class TestGradient:
    def test_sin(self, torus64):
        x1, _ = torus64.coords()
        d1, d2 = spectral_gradient(sin_field(torus64))
        assert np.max(np.abs(d1.values[..., 0] - np.cos(x1))) < 1e-13
        assert np.max(np.abs(d2.values)) < 1e-13

    def test_constant(self, torus64):
        d1, d2 = spectral_gradient(constant_field(torus64, [2.0, -1.0]))
        assert np.max(np.abs(d1.values)) < 1e-13 and np.max(np.abs(d2.values)) < 1e-13

    def test_sum_of_modes(self, torus64):
        x1, x2 = torus64.coords()
        d1, d2 = spectral_gradient(DiscreteField(torus64, np.sin(x1) + np.cos(x2)))
        assert np.max(np.abs(d1.values[..., 0] - np.cos(x1))) < 1e-13
        assert np.max(np.abs(d2.values[..., 0] + np.sin(x2))) < 1e-13

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
    def test_linear(self, a, b, seed):
        g = make_grid("torus", 32)
        f, h = synth_field(3.0, seed, g, 2), synth_field(2.0, seed + 1, g, 2)
        lhs = spectral_gradient(f * a + h * b)
        fa, fb = spectral_gradient(f), spectral_gradient(h)
        for i in range(2):
            ref = a * fa[i].values + b * fb[i].values
            assert np.max(np.abs(lhs[i].values - ref)) <= 1e-12 * (1 + np.max(np.abs(ref)))


class TestNorms:
    def test_constant(self, torus64):
        c = -1.7
        got = sobolev_norm(constant_field(torus64, [c]), SobolevIndex(2, 2))
        assert got == pytest.approx(math.sqrt(c * c * 4 * math.pi**2), rel=1e-12)

    @pytest.mark.parametrize("k, want", [(1, 2 * math.pi), (0, math.sqrt(2) * math.pi)])
    def test_sin(self, torus64, k, want):
        assert sobolev_norm(sin_field(torus64), SobolevIndex(k, 2)) == pytest.approx(want, rel=1e-12)

    def test_drop_too_large(self, torus64):
        with pytest.raises(SobolevIndexError):
            sobolev_norm(sin_field(torus64), SobolevIndex(2, 4), drop=3)

    @settings(max_examples=20, deadline=None)
    @given(c=st.floats(-100, 100).filter(lambda x: abs(x) > 1e-3), seed=st.integers(0, 1000))
    def test_homogeneous(self, c, seed):
        g = make_grid("torus", 32)
        f = synth_field(4.0, seed, g, 3)
        idx = SobolevIndex(2, 3)
        assert sobolev_norm(f * c, idx) == pytest.approx(abs(c) * sobolev_norm(f, idx), rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_in_drop(self, torus32, seed):
        f = synth_field(3.0, seed, torus32, 2)
        idx = SobolevIndex(3, 4)
        vals = [sobolev_norm(f, idx, d) for d in range(4)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("p", [2, 4, 6])
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_power_matches_norm(self, torus32, p, k):
        f = synth_field(4.0, 3, torus32, 2)
        idx = SobolevIndex(k, p)
        assert norm_power(f, idx) == pytest.approx(sobolev_norm(f, idx) ** p, rel=1e-12)

    def test_power_closed_forms(self, torus64):
        one = constant_field(torus64, [1.0])
        assert norm_power(one, SobolevIndex(0, 4)) == pytest.approx(4 * math.pi**2, rel=1e-12)
        assert norm_power(sin_field(torus64), SobolevIndex(0, 2)) == pytest.approx(2 * math.pi**2, rel=1e-12)

    def test_golden_values(self):
        g = make_grid("torus", 256)
        assert norm_power(sin_field(g), SobolevIndex(0, 4)) == pytest.approx(GOLDEN_SIN4, rel=1e-13)
        f = synth_field(5.0, 7, g, 2)
        assert norm_power(f, SobolevIndex(2, 4)) == pytest.approx(GOLDEN_SYNTH_K2P4, rel=1e-12)

    def test_golden_is_grid_converged(self, torus64):
        # the resolved quartic integrand is already exact at N=64
        assert norm_power(sin_field(torus64), SobolevIndex(0, 4)) == pytest.approx(GOLDEN_SIN4, rel=1e-13)

    def test_odd_p_rejected(self, torus32):
        with pytest.raises(UnsupportedExponentError):
            norm_power(sin_field(torus32), SobolevIndex(0, 3))
        with pytest.raises(UnsupportedExponentError):
            norm_power_gradient(sin_field(torus32), SobolevIndex(1, 3))


class TestGradientOfPower:
    def test_zero(self, torus32):
        g = norm_power_gradient(constant_field(torus32, [0.0, 0.0]), SobolevIndex(2, 4))
        assert np.all(g.values == 0)

    def test_p2_k0(self, torus32):
        f = synth_field(3.0, 1, torus32, 2)
        g = norm_power_gradient(f, SobolevIndex(0, 2))
        assert np.max(np.abs(g.values - 2 * f.values)) < 1e-13

    def test_sin_cubed(self, torus64):
        x1, _ = torus64.coords()
        g = norm_power_gradient(sin_field(torus64), SobolevIndex(0, 4))
        assert np.max(np.abs(g.values[..., 0] - 4 * np.sin(x1) ** 3)) < 1e-13

    @pytest.mark.parametrize("p", [2, 4])
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_central_differences(self, torus32, k, p):
        idx = SobolevIndex(k, p)
        f = synth_field(k + 4.0, 11, torus32, 2)
        g = norm_power_gradient(f, idx)
        t = 1e-4
        for i in range(20):
            h = synth_field(k + 4.0, 100 + i, torus32, 2)
            fd = (norm_power(f + h * t, idx) - norm_power(f - h * t, idx)) / (2 * t)
            assert inner(g, h) == pytest.approx(fd, rel=1e-6)


class TestPrimitives:
    def test_integrate(self, torus64):
        x1, _ = torus64.coords()
        assert integrate(constant_field(torus64, [1.0])) == pytest.approx(4 * math.pi**2, rel=1e-14)
        assert abs(integrate(sin_field(torus64))) < 1e-13
        assert integrate(DiscreteField(torus64, np.sin(x1) ** 2)) == pytest.approx(2 * math.pi**2, rel=1e-14)

    def test_integrate_rejects_vectors(self, torus32):
        with pytest.raises(ValueError):
            integrate(constant_field(torus32, [1.0, 2.0]))

    def test_integrate_linear(self, torus32):
        f, h = synth_field(2.0, 1, torus32), synth_field(2.0, 2, torus32)
        assert integrate(f * 2.5 - h) == pytest.approx(2.5 * integrate(f) - integrate(h), abs=1e-12)

    def test_multilinear_pair_is_square(self, torus32):
        f = synth_field(2.0, 1, torus32, 3)
        m = multilinear_product(f, f)
        assert np.allclose(m.values[..., 0], np.sum(f.values**2, axis=-1), rtol=1e-14, atol=0)

    def test_multilinear_zero(self, torus32):
        f = synth_field(2.0, 1, torus32, 3)
        z = constant_field(torus32, [0.0, 0.0, 0.0])
        assert np.all(multilinear_product(f, f, z, f).values == 0)

    def test_multilinear_odd_count(self, torus32):
        f = synth_field(2.0, 1, torus32)
        with pytest.raises(ValueError):
            multilinear_product(f, f, f)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([2, 4, 6]))
    def test_holder(self, seed, p):
        g = make_grid("torus", 16)
        rng = np.random.default_rng(seed)
        fs = [DiscreteField(g, rng.normal(size=(16, 16, 2)) * rng.uniform(0.1, 5)) for _ in range(p)]
        lhs = np.sum(np.abs(multilinear_product(*fs).values)) * g.cell_measure
        rhs = math.prod(sobolev_norm(f, SobolevIndex(0, p)) for f in fs)
        assert lhs <= rhs * (1 + 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([2, 4]))
    def test_convexity_inequality(self, seed, p):
        rng = np.random.default_rng(seed)
        nt = int(rng.integers(2, 40))
        vals = rng.normal(size=(8, nt)) * rng.uniform(0.01, 10)
        dt = 1.0 / nt
        lhs = (np.sum(np.abs(vals), axis=1) * dt) ** p
        rhs = np.sum(np.abs(vals) ** p, axis=1) * dt
        assert np.all(lhs <= rhs * (1 + 1e-12))


class TestSynth:
    def test_deterministic(self, torus64):
        a = synth_field(3.5, 9, torus64, 2)
        b = synth_field(3.5, 9, torus64, 2)
        assert np.array_equal(a.values, b.values)

    def test_seed_changes_field(self, torus64):
        assert not np.array_equal(synth_field(3.5, 9, torus64).values, synth_field(3.5, 10, torus64).values)

    def test_smooth_ratio_stable(self):
        idx3, idx0 = SobolevIndex(3, 2), SobolevIndex(0, 2)
        ratios = []
        for n in (64, 128):
            f = synth_field(10.0, 4, make_grid("torus", n))
            ratios.append(sobolev_norm(f, idx3) / sobolev_norm(f, idx0))
        assert abs(ratios[1] / ratios[0] - 1) <= 0.05

    def test_rough_field_refinement(self):
        k = 2
        hi, lo = [], []
        for n in (64, 128, 256, 512):
            f = synth_field(k + 1.0 - 0.25, 4, make_grid("torus", n))
            hi.append(sobolev_norm(f, SobolevIndex(k + 1, 2)))
            lo.append(sobolev_norm(f, SobolevIndex(k, 2)))
        assert all(b > a * 1.05 for a, b in zip(hi, hi[1:]))
        assert abs(lo[-1] / lo[-2] - 1) < 0.02

    def test_rejects_nonpositive_decay(self, torus32):
        with pytest.raises(ValueError):
            synth_field(0.0, 1, torus32)

    def test_lowpass_keeps_low_modes(self, torus64):
        f = sin_field(torus64)
        assert np.max(np.abs(lowpass(f, 4).values - f.values)) < 1e-14
        assert np.max(np.abs(lowpass(f, 0).values)) < 1e-14


class TestOffGrid:
    def test_grid_hits(self, torus32):
        f = synth_field(3.0, 5, torus32, 2)
        x1, x2 = torus32.coords()
        (vals,) = torus_interpolate(f, x1, x2)
        assert np.max(np.abs(vals - f.values)) < 1e-13

    def test_shift_matches_dense(self, torus32):
        f = synth_field(3.0, 5, torus32, 2)
        x1, x2 = torus32.coords()
        orders = [(0, 0), (1, 0), (1, 1)]
        dense = torus_interpolate(f, x1 + 0.3, x2 - 0.7, orders)
        fast = torus_shift(f, (0.3, -0.7), orders)
        for a, b in zip(dense, fast):
            assert np.max(np.abs(a - b)) < 1e-12

    def test_resolved_mode_exact(self, torus32):
        x = np.array([0.123, 2.5, 6.0])
        (vals,) = torus_interpolate(sin_field(torus32), x, np.zeros(3))
        assert np.max(np.abs(vals[:, 0] - np.sin(x))) < 1e-14
