import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssrc.hilbert import basis_state, fidelity, make_basis, random_state
from ssrc.prng import SplitMix64
from ssrc.schwinger import (
    InvalidModePairError,
    MajoranaSpec,
    NonHermitianGeneratorError,
    SparseOperator,
    axis_generator,
    bloch_vector,
    exp_unitary,
    fit_rotation,
    j_operator,
    majorana_to_state,
    point_multiset_distance,
    relative_phase_op,
    rotation,
    sng_unitary,
    state_to_majorana,
    su2_point_matrix,
    transform_points,
)


def _dense(op):
    return op.to_dense()


class TestAlgebra:
    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_commutators(self, n):
        basis = make_basis(2, n)
        jx, jy, jz = (_dense(j_operator(basis, ax)) for ax in "xyz")
        for a, b, c in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
            assert np.max(np.abs(a @ b - b @ a - 1j * c)) < 1e-12

    @pytest.mark.parametrize("n", [1, 3, 8])
    def test_ladder_commutator_and_matrix_elements(self, n):
        basis = make_basis(2, n)
        jp = _dense(j_operator(basis, "+"))
        jm = _dense(j_operator(basis, "-"))
        jz = _dense(j_operator(basis, "z"))
        assert np.max(np.abs(jp @ jm - jm @ jp - 2 * jz)) < 1e-12
        for k in range(n):
            expect = math.sqrt((k + 1) * (n - k))
            assert abs(jp[k + 1, k] - expect) < 1e-13

    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_casimir(self, n):
        basis = make_basis(2, n)
        jx, jy, jz = (_dense(j_operator(basis, ax)) for ax in "xyz")
        casimir = jx @ jx + jy @ jy + jz @ jz
        j = n / 2.0
        assert np.max(
            np.abs(casimir - j * (j + 1) * np.eye(n + 1))
        ) < 1e-12

    def test_jz_diagonal(self):
        basis = make_basis(2, 4)
        jz = _dense(j_operator(basis, "z"))
        for idx, occ in enumerate(basis.occupations):
            assert jz[idx, idx] == (occ[0] - occ[1]) / 2.0

    def test_mode_pair_selection(self):
        basis = make_basis(3, 2)
        jz = _dense(j_operator(basis, "z", mode_pair=(1, 2)))
        for idx, occ in enumerate(basis.occupations):
            assert jz[idx, idx] == (occ[1] - occ[2]) / 2.0
        with pytest.raises(InvalidModePairError):
            j_operator(basis, "x", mode_pair=(0, 0))
        with pytest.raises(InvalidModePairError):
            j_operator(basis, "x", mode_pair=(0, 3))

    def test_axis_generator_normalizes_direction(self):
        basis = make_basis(2, 3)
        g1 = _dense(axis_generator(basis, (0.0, 0.0, 2.0)))
        gz = _dense(j_operator(basis, "z"))
        assert np.max(np.abs(g1 - gz)) < 1e-12


class TestExpUnitary:
    def test_requires_hermitian(self):
        basis = make_basis(2, 2)
        with pytest.raises(NonHermitianGeneratorError):
            exp_unitary(j_operator(basis, "+"), 0.3)

    @given(
        st.floats(min_value=-3.0, max_value=3.0),
        st.floats(min_value=-3.0, max_value=3.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_group_property_and_unitarity(self, chi1, chi2):
        basis = make_basis(2, 4)
        gen = j_operator(basis, "y")
        u1 = _dense(exp_unitary(gen, chi1))
        u2 = _dense(exp_unitary(gen, chi2))
        u12 = _dense(exp_unitary(gen, chi1 + chi2))
        assert np.max(np.abs(u1 @ u2 - u12)) < 1e-12
        assert np.max(np.abs(u1 @ u1.conj().T - np.eye(5))) < 1e-12

    def test_rotation_overlap_closed_form(self):
        for n in (1, 4, 17):
            basis = make_basis(2, n)
            start = basis_state(basis, (0, n))
            for theta in (0.3, 1.1, 2.5):
                rotated = rotation(basis, theta, 0.7).apply(start)
                overlap = abs(
                    np.vdot(start.amplitudes, rotated.amplitudes)
                )
                assert abs(overlap - math.cos(theta / 2) ** n) < 1e-12

    def test_rotation_amplitudes_binomial(self):
        n, theta, phi = 6, 0.9, 1.3
        basis = make_basis(2, n)
        rotated = rotation(basis, theta, phi).apply(
            basis_state(basis, (0, n))
        )
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        expect = np.array(
            [
                np.exp(-1j * phi * n / 2)
                * math.sqrt(math.comb(n, k))
                * (np.exp(1j * phi) * s) ** k
                * c ** (n - k)
                for k in range(n + 1)
            ]
        )
        assert np.max(np.abs(np.asarray(rotated.amplitudes) - expect)) < 1e-12

    def test_pi_rotation_moves_all_photons(self):
        basis = make_basis(2, 5)
        flipped = rotation(basis, math.pi, 0.0).apply(
            basis_state(basis, (0, 5))
        )
        assert abs(abs(flipped.amplitude((5, 0))) - 1.0) < 1e-12

    def test_sng_power_two_phases(self):
        n, chi = 3, 0.4
        basis = make_basis(2, n)
        u = _dense(sng_unitary(basis, "z", chi, power=2))
        for idx, occ in enumerate(basis.occupations):
            jz_val = (occ[0] - occ[1]) / 2.0
            assert abs(u[idx, idx] - np.exp(1j * chi * jz_val**2)) < 1e-12
        with pytest.raises(ValueError):
            sng_unitary(basis, "z", chi, power=1)

    def test_sparse_operator_json_round_trip(self):
        basis = make_basis(2, 3)
        op = j_operator(basis, "x")
        again = SparseOperator.from_json(op.to_json())
        assert again.basis == basis
        assert np.array_equal(op.to_dense(), again.to_dense())


class TestRelativePhase:
    def test_cyclic_period(self):
        n = 5
        basis = make_basis(2, n)
        op = _dense(relative_phase_op(basis))
        acc = np.eye(n + 1)
        for _ in range(n + 1):
            acc = op @ acc
        assert np.max(np.abs(acc - np.eye(n + 1))) < 1e-12

    def test_is_permutation(self):
        basis = make_basis(3, 3)
        mat = _dense(relative_phase_op(basis, (0, 2)))
        assert np.max(np.abs(mat @ mat.conj().T - np.eye(10))) < 1e-12
        assert set(np.unique(np.abs(mat))) == {0.0, 1.0}


class TestMajorana:
    def test_coincident_points_give_rotated_reference(self):
        n, theta, phi = 4, 1.0, 0.6
        basis = make_basis(2, n)
        spec = MajoranaSpec(points=((theta, phi),) * n)
        state = majorana_to_state(spec, basis)
        reference = rotation(basis, theta, phi).apply(
            basis_state(basis, (0, n))
        )
        assert fidelity(state, reference) > 1 - 1e-12

    def test_all_poles(self):
        basis = make_basis(2, 3)
        north = majorana_to_state(MajoranaSpec(points=((0.0, 0.0),) * 3), basis)
        assert abs(abs(north.amplitude((0, 3))) - 1.0) < 1e-14
        south = majorana_to_state(
            MajoranaSpec(points=((math.pi, 0.0),) * 3), basis
        )
        assert abs(abs(south.amplitude((3, 0))) - 1.0) < 1e-14

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_round_trip_random_states(self, n):
        basis = make_basis(2, n)
        rng = SplitMix64(0xA11CE)
        for i in range(10):
            state = random_state(basis, rng.derive(i))
            spec = state_to_majorana(state)
            assert len(spec.points) == n
            back = majorana_to_state(spec, basis)
            assert fidelity(state, back) >= 1 - 1e-8

    def test_degree_deficit_yields_north_pole_points(self):
        basis = make_basis(2, 4)
        state = basis_state(basis, (1, 3))  # polynomial degree 1 < N
        spec = state_to_majorana(state)
        poles = sum(1 for th, _ in spec.points if abs(th) < 1e-12)
        assert poles == 3

    def test_rotation_covariance_of_point_multiset(self):
        n, theta, phi = 6, 0.8, 2.1
        basis = make_basis(2, n)
        state = random_state(basis, 2024)
        rotated = rotation(basis, theta, phi).apply(state)
        direct = state_to_majorana(rotated).points
        pushed = transform_points(
            state_to_majorana(state).points, su2_point_matrix(theta, phi)
        )
        assert point_multiset_distance(direct, pushed) < 1e-6

    def test_su2_point_matrix_is_special_unitary(self):
        mat = su2_point_matrix(0.7, 1.9)
        assert np.max(np.abs(mat @ mat.conj().T - np.eye(2))) < 1e-12
        assert abs(np.linalg.det(mat) - 1.0) < 1e-12

    def test_bloch_vector(self):
        assert np.allclose(bloch_vector((0.0, 0.0)), [0, 0, 1])
        vec = bloch_vector((math.pi / 2, 0.0))
        assert np.allclose(vec, [1, 0, 0], atol=1e-12)

    def test_sng_changes_point_multiset_nontrivially(self):
        # A quadratic-generator unitary is not equivalent to any rotation:
        # the induced motion of the point multiset differs from every
        # rigid rotation tried.
        n = 4
        basis = make_basis(2, n)
        state = random_state(basis, 99)
        kicked = sng_unitary(basis, "z", 0.9, power=2).apply(state)
        kicked_points = state_to_majorana(kicked).points
        base_points = state_to_majorana(state).points
        best = math.inf
        for th in np.linspace(0, math.pi, 13):
            for ph in np.linspace(0, 2 * math.pi, 25):
                moved = transform_points(
                    base_points, su2_point_matrix(float(th), float(ph))
                )
                best = min(
                    best, point_multiset_distance(kicked_points, moved)
                )
        assert best > 1e-3


class TestFitRotation:
    def test_recovers_rotation_products(self):
        basis = make_basis(2, 5)
        u = rotation(basis, 0.7, 1.1) @ rotation(basis, 1.9, -0.4)
        fit = fit_rotation(SparseOperator(basis, u.to_dense()))
        assert fit.residual < 1e-8

    def test_rejects_sng(self):
        basis = make_basis(2, 4)
        u = sng_unitary(basis, "z", 0.8, power=2)
        fit = fit_rotation(SparseOperator(basis, u.to_dense()))
        assert fit.residual > 1e-3
