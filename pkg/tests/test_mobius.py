import cmath

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sobolev_action import (
    ConfigurationError,
    DegenerateTripleError,
    InvariantViolation,
    MobiusElement,
    NeighborhoodError,
    ProjectionError,
    SliceSpec,
    SobolevIndex,
    WitnessError,
    constant_section,
    equivariant_extension,
    evaluate,
    mobius_act,
    mobius_from_triple,
    random_near_identity,
    random_sphere_field,
    slice_projection,
    translation_family_at,
)
from sobolev_action.sphere import sample_function

complex_pts = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)


def close_points(z, w, tol=1e-9):
    if cmath.isinf(z) or cmath.isinf(w):
        return cmath.isinf(z) and cmath.isinf(w)
    return abs(z - w) <= tol * (1 + abs(z))


class TestElement:
    def test_identity(self):
        e = MobiusElement.identity()
        assert e.coefficients == (1, 0, 0, 1) and e.distance() == 0.0

    def test_normalization(self):
        g = MobiusElement(2, 0, 0, 2)
        assert g.coefficients == (1, 0, 0, 1)
        h = MobiusElement(-1, -2, 0, -1)
        assert h.matrix[0, 0].real > 0 and abs(h.det - 1) < 1e-14

    def test_singular(self):
        with pytest.raises(DegenerateTripleError):
            MobiusElement(1, 2, 2, 4)

    @pytest.mark.parametrize("z", [0j, 1 + 1j, -3.5 + 0.2j])
    def test_inverse(self, z):
        g = MobiusElement(1 + 0.1j, 0.2, -0.3j, 1.1)
        assert close_points(g.inverse()(g(z)), z)
        assert (g @ g.inverse()).distance() < 1e-14

    def test_infinity(self):
        g = MobiusElement(2, 1, 1, 1)
        assert g(None) == 2 and cmath.isinf(g(-1))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), z=complex_pts)
    def test_composition_is_function_composition(self, seed, z):
        rng = np.random.default_rng(seed)
        g, h = random_near_identity(rng, 0.5), random_near_identity(rng, 0.5)
        assert close_points((g @ h)(z), g(h(z)), 1e-8)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_near_identity(rng, 0.3) for _ in range(3))
        assert ((a @ b) @ c).distance(a @ (b @ c)) < 1e-13

    def test_near_identity_radius(self, rng):
        for _ in range(20):
            assert random_near_identity(rng, 0.05).distance() <= 0.05

    def test_act_dispatch(self, center):
        g = MobiusElement(1, 0.01, 0, 1)
        assert mobius_act(g, 0j) == 0.01
        assert isinstance(mobius_act(g, g), MobiusElement)
        assert mobius_act(MobiusElement.identity(), center) is center


class TestTriple:
    def test_standard_triple_is_identity(self):
        assert mobius_from_triple(0, 1, None).distance() == 0.0

    @pytest.mark.parametrize("y", [(1j, 2, -1), (5, 0, 3 + 1j), (None, 1, 0), (0.5, 2 + 2j, None)])
    def test_sends_marked_points(self, y):
        g = mobius_from_triple(*y)
        for src, dst in zip((0, 1, None), y):
            want = complex("inf") if dst is None else complex(dst)
            assert close_points(g(src), want, 1e-12)

    def test_homogeneous_input(self):
        g = mobius_from_triple((0, 2), (3, 3), (4, 0))
        assert g.distance() < 1e-15

    @pytest.mark.parametrize("y", [(1, 1, 2), (None, 0, None), (2j, 0, 2j)])
    def test_degenerate(self, y):
        with pytest.raises(DegenerateTripleError):
            mobius_from_triple(*y)

    def test_neighborhood(self):
        mobius_from_triple(0.01, 1, None, eps=0.1)
        with pytest.raises(NeighborhoodError):
            mobius_from_triple(0.5, 1, None, eps=0.1)

    @settings(max_examples=60, deadline=None)
    @given(y1=complex_pts, y2=complex_pts, y3=complex_pts)
    def test_random_triples(self, y1, y2, y3):
        pts = [y1, y2, y3]
        gaps = [abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]]
        if min(gaps) == 0:
            with pytest.raises(DegenerateTripleError):
                mobius_from_triple(*pts)
            return
        assume(min(gaps) > 1e-3)
        g = mobius_from_triple(*pts)
        assert abs(g.det - 1) < 1e-10
        for src, dst in zip((0, 1, None), pts):
            assert close_points(g(src), dst, 1e-6)


class TestSliceSpec:
    def test_center_on_slice(self, spec):
        assert np.max(spec.residuals(spec.f)) < 1e-12
        assert max(spec.conditions) < 10

    def test_bad_shapes(self, center):
        with pytest.raises(ConfigurationError):
            SliceSpec(center, np.zeros((3, 2, 2)), np.zeros((3, 2)))

    def test_center_must_satisfy(self, spec):
        with pytest.raises(InvariantViolation):
            SliceSpec(spec.f, spec.A, spec.b + 1.0)

    def test_seeded_constraints(self, center):
        s = SliceSpec.through(center, seed=4)
        assert np.max(s.residuals(center)) < 1e-12


class TestProjection:
    def test_slice_member_fixed(self, spec):
        proj = slice_projection(spec.f, spec)
        assert proj.element.distance() == 0.0 and proj.iterations == (0, 0, 0)
        assert proj.field is spec.f

    @pytest.mark.parametrize("seed", range(4))
    def test_recovers_group_element(self, spec, seed):
        gamma = random_near_identity(np.random.default_rng(seed), 0.03)
        k = mobius_act(gamma, spec.f)
        proj = slice_projection(k, spec)
        # k o T^{-1}(k) = f, so T^{-1}(k) = gamma^{-1}
        assert proj.element.distance(gamma.inverse()) < 1e-8
        assert max(proj.iterations) <= 6
        assert np.max(spec.residuals(proj.field)) < 1e-9

    def test_idempotent(self, spec):
        gamma = random_near_identity(np.random.default_rng(7), 0.03)
        _, on_slice = slice_projection(mobius_act(gamma, spec.f), spec)
        again = slice_projection(on_slice, spec)
        assert again.element.distance() < 1e-9

    def test_equivariant(self, spec):
        rng = np.random.default_rng(11)
        k = mobius_act(random_near_identity(rng, 0.02), spec.f)
        gamma = random_near_identity(rng, 0.02)
        t_k = slice_projection(k, spec).element
        t_kg = slice_projection(mobius_act(gamma, k), spec).element
        assert t_kg.distance(gamma.inverse() @ t_k) < 1e-8

    def test_far_field_fails(self, spec, sphere64):
        other = random_sphere_field(sphere64, 99, 4, scale=3.0)
        with pytest.raises(ProjectionError):
            slice_projection(other, spec)

    def test_grid_mismatch(self, spec):
        from sobolev_action import make_grid

        with pytest.raises(ConfigurationError):
            slice_projection(random_sphere_field(make_grid("sphere", 32), 0), spec)


class TestSection:
    def test_witness(self, center):
        xi0 = random_sphere_field(center.grid, 5, 4)
        sec = constant_section(xi0, 1)
        assert sec.has_extension and sec.witness["tail"] < 1e-10 and sec.witness["drift"] < 0.05

    def test_unresolved_rejected(self, sphere64):
        rough = sample_function(sphere64, lambda x, y, z: np.abs(x) ** 0.5)
        with pytest.raises(WitnessError):
            constant_section(rough, 1)

    def test_order_too_high(self, center):
        from sobolev_action import SobolevIndexError

        with pytest.raises(SobolevIndexError):
            constant_section(center, 4, SobolevIndex(3, 4))

    def test_extension_on_slice_is_value(self, spec):
        xi0 = random_sphere_field(spec.f.grid, 5, 4)
        assert equivariant_extension(constant_section(xi0, 1), spec, spec.f) is xi0

    def test_extension_equivariant(self, spec):
        xi0 = random_sphere_field(spec.f.grid, 5, 4)
        sec = constant_section(xi0, 1)
        rng = np.random.default_rng(2)
        k = mobius_act(random_near_identity(rng, 0.02), spec.f)
        gamma = random_near_identity(rng, 0.02)
        lhs = equivariant_extension(sec, spec, mobius_act(gamma, k))
        rhs = mobius_act(gamma, equivariant_extension(sec, spec, k))
        assert np.max(np.abs(lhs.values - rhs.values)) < 1e-8


class TestEvaluateAndTranslation:
    def test_torus_point(self, torus32):
        from sobolev_action import synth_field

        f = synth_field(3.0, 1, torus32)
        x1, x2 = torus32.coords()
        assert evaluate(f, (x1[3, 5], x2[3, 5]))[0] == pytest.approx(f.values[3, 5, 0], abs=1e-13)

    def test_sphere_point(self, center):
        assert evaluate(center, 0j).shape == (4,)

    @pytest.mark.parametrize("x0", [(1.0, 2.0), (6.0, 0.2)])
    def test_translation_family_at(self, x0):
        fam = translation_family_at(x0, 0.8)
        a = np.array([0.1, -0.05])
        y1, y2 = fam(a, np.array([x0[0]]), np.array([x0[1]]))
        assert y1[0] == pytest.approx(x0[0] + a[0]) and y2[0] == pytest.approx(x0[1] + a[1])
        far = (x0[0] + 2.5, x0[1] + 2.5)
        z1, z2 = fam(a, np.array([far[0]]), np.array([far[1]]))
        assert z1[0] == far[0] and z2[0] == far[1]

    def test_translation_family_radius(self):
        with pytest.raises(ConfigurationError):
            translation_family_at((0, 0), 2.0)
