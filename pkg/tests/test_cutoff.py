import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobolev_action import (
    BumpProfile,
    ConfigurationError,
    SectionOnSlice,
    SobolevIndex,
    UnsupportedExponentError,
    constant_section,
    global_perturbation,
    mobius_act,
    norm_power,
    random_near_identity,
    random_sphere_field,
    slice_cutoff,
    slice_projection,
)

IDX = SobolevIndex(2, 4)


@pytest.fixture(scope="module")
def near(spec):
    """Fields on short orbits through the center plus their slice distances."""
    rng = np.random.default_rng(21)
    out = []
    for _ in range(3):
        k = mobius_act(random_near_identity(rng, 0.03), spec.f)
        bump = random_sphere_field(spec.f.grid, int(rng.integers(1000)), 4, degree=2, scale=1e-3)
        k = k + bump
        out.append(k)
    return out


@pytest.fixture(scope="module")
def chi(spec, near):
    dists = [norm_power(slice_projection(k, spec).field - spec.f, IDX) for k in near]
    return BumpProfile(0.5 * min(dists), 4.0 * max(dists))


@pytest.fixture(scope="module")
def section(spec):
    return constant_section(random_sphere_field(spec.f.grid, 8, 4, degree=2), 1)


class TestProfile:
    def test_plateaus(self):
        chi = BumpProfile(1.0, 2.0)
        assert chi(0.0) == 1.0 and chi(1.0) == 1.0 and chi(2.0) == 0.0 and chi(7.0) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(r=st.floats(0.0, 10.0), dr=st.floats(1e-3, 1.0))
    def test_monotone(self, r, dr):
        chi = BumpProfile(1.0, 3.0)
        assert chi(r + dr) <= chi(r)
        assert 0.0 <= chi(r) <= 1.0

    @pytest.mark.parametrize("r0, r1", [(0.0, 1.0), (2.0, 1.0), (1.0, 1.0)])
    def test_bad_radii(self, r0, r1):
        with pytest.raises(ConfigurationError):
            BumpProfile(r0, r1)

    def test_vectorized(self):
        vals = BumpProfile(1.0, 2.0)(np.array([0.5, 1.5, 2.5]))
        assert vals.shape == (3,) and 0 < vals[1] < 1


class TestCutoff:
    def test_one_at_center(self, spec, chi):
        assert slice_cutoff(spec.f, spec, chi, IDX) == 1.0

    def test_orbit_constant(self, spec, chi, near):
        rng = np.random.default_rng(5)
        for k in near:
            gamma = random_near_identity(rng, 0.02)
            assert abs(slice_cutoff(mobius_act(gamma, k), spec, chi, IDX)
                       - slice_cutoff(k, spec, chi, IDX)) < 1e-8

    def test_zero_outside_basin(self, spec, chi, sphere64):
        far = random_sphere_field(sphere64, 99, 4, scale=3.0)
        assert slice_cutoff(far, spec, chi, IDX) == 0.0

    def test_odd_exponent(self, spec, chi):
        with pytest.raises(UnsupportedExponentError):
            slice_cutoff(spec.f, spec, chi, SobolevIndex(2, 3))


class TestPerturbation:
    def test_center_returns_section_value(self, spec, chi, section):
        out = global_perturbation(spec.f, spec, section, chi, IDX)
        assert np.array_equal(out.values, section(spec.f).values)

    def test_zero_outside(self, spec, chi, section, sphere64):
        far = random_sphere_field(sphere64, 99, 4, scale=3.0)
        out = global_perturbation(far, spec, section, chi, IDX)
        assert np.all(out.values == 0) and out.target_dim == 4

    def test_equivariant(self, spec, chi, section, near):
        rng = np.random.default_rng(6)
        for k in near:
            gamma = random_near_identity(rng, 0.02)
            lhs = global_perturbation(mobius_act(gamma, k), spec, section, chi, IDX)
            rhs = mobius_act(gamma, global_perturbation(k, spec, section, chi, IDX))
            assert np.max(np.abs(lhs.values - rhs.values)) < 1e-6

    def test_needs_extension_data(self, spec, chi):
        bare = SectionOnSlice(lambda h: h)
        with pytest.raises(ConfigurationError):
            global_perturbation(spec.f, spec, bare, chi, IDX)
