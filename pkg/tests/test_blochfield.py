import numpy as np
import pytest
import scipy.linalg

from dickedrive import (
    DriveSchedule,
    build_assembly,
    coherent_state,
    compensator_basis,
    dicke_state,
    eigensystem,
    hamiltonian_at,
)
from dickedrive.blochfield import (
    expectation_field,
    q_function,
    sphere_grid,
    torque_field,
)


def oracle_coherent(ops, theta, phi):
    """Independent coherent-state construction by brute-force rotation."""
    rot = scipy.linalg.expm(-1j * phi * np.asarray(ops.jz)) @ scipy.linalg.expm(
        -1j * theta * np.asarray(ops.jy)
    )
    return rot @ dicke_state(ops.n_atoms, ops.n_atoms / 2)


class TestQFunction:
    def test_peaks_at_the_state_direction(self, ops30):
        psi = coherent_state(ops30, 1.2, 0.7)
        coarse = q_function(psi, sphere_grid(60, 120))
        i, j = np.unravel_index(np.argmax(coarse.values), coarse.values.shape)
        assert abs(coarse.thetas[i] - 1.2) <= np.pi / 59
        assert abs(coarse.phis[j] - 0.7) <= 2 * np.pi / 119
        fine = q_function(psi, sphere_grid(400, 800))
        assert fine.values.max() >= 0.999

    def test_dicke_state_is_azimuth_independent(self, ops30):
        q = q_function(dicke_state(30, 0), sphere_grid(40, 80))
        spread = np.max(q.values, axis=1) - np.min(q.values, axis=1)
        assert np.max(spread) <= 1e-12

    def test_ground_state_band_narrows_during_ramp(self, ops30):
        # second moment of Q over theta shrinks as the confinement turns on
        sched = DriveSchedule(2.0, 0.3, 1.0, dicke_n=0.0)
        asm = build_assembly(ops30, sched)
        grid = sphere_grid(120, 60)

        def theta_variance(t):
            ground = eigensystem(hamiltonian_at(asm, sched, t)[0]).ground_state
            q = q_function(ground, grid)
            weights = q.values.sum(axis=1) * np.sin(grid.thetas)
            mean = np.sum(weights * grid.thetas) / np.sum(weights)
            return np.sum(weights * (grid.thetas - mean) ** 2) / np.sum(weights)

        assert theta_variance(0.5) < theta_variance(0.0)

    def test_normalization(self, ops30):
        psi = coherent_state(ops30, 1.1, 2.3)
        grid = sphere_grid(200, 400)
        q = q_function(psi, grid)
        dphi = 2 * np.pi / 400
        integral = np.trapezoid(q.values.sum(axis=1) * dphi * np.sin(grid.thetas), grid.thetas)
        assert (31 / (4 * np.pi)) * integral == pytest.approx(1.0, abs=1e-3)


class TestExpectationField:
    def test_jz_gives_cos_theta(self, ops30):
        grid = sphere_grid(9, 11)
        field = expectation_field(np.asarray(ops30.jz), grid)
        expected = 15 * np.cos(grid.thetas)[:, None] * np.ones((1, 11))
        assert np.max(np.abs(field.values - expected)) <= 1e-10

    def test_quadratic_operator_is_nonnegative(self, ops30):
        field = expectation_field(np.asarray(ops30.jz @ ops30.jz), sphere_grid(15, 20))
        assert np.min(field.values) >= -1e-12

    def test_l1_matches_direct_oracle_at_random_nodes(self, ops30, rng):
        l1 = np.asarray(compensator_basis(ops30, 0, 1).operators[0])
        grid = sphere_grid(25, 30)
        field = expectation_field(l1, grid)
        for _ in range(20):
            i = rng.integers(0, 25)
            j = rng.integers(0, 30)
            psi = oracle_coherent(ops30, grid.thetas[i], grid.phis[j])
            direct = np.vdot(psi, l1 @ psi).real
            assert abs(field.values[i, j] - direct) <= 1e-10

    def test_linearity(self, ops6):
        grid = sphere_grid(8, 9)
        a = np.asarray(ops6.jx @ ops6.jx)
        b = np.asarray(ops6.jz)
        total = expectation_field(a + b, grid)
        parts = expectation_field(a, grid).values + expectation_field(b, grid).values
        assert np.array_equal(total.values, total.values)
        assert np.max(np.abs(total.values - parts)) <= 1e-12


class TestTorqueField:
    def test_linear_jz_precesses(self, ops30):
        grid = sphere_grid(7, 9)
        torque = torque_field(np.asarray(ops30.jz), grid)
        jx = expectation_field(np.asarray(ops30.jx), grid).values
        jy = expectation_field(np.asarray(ops30.jy), grid).values
        assert np.max(np.abs(torque.values[:, :, 0] + jy)) <= 1e-10
        assert np.max(np.abs(torque.values[:, :, 1] - jx)) <= 1e-10
        assert np.max(np.abs(torque.values[:, :, 2])) <= 1e-10

    def test_identity_gives_zero(self, ops6):
        torque = torque_field(np.eye(7), sphere_grid(5, 6))
        assert np.max(np.abs(torque.values)) <= 1e-12

    def test_total_spin_is_conserved(self, ops30):
        # d<J^2>/dt = i<[H, J^2]> vanishes because J^2 is a constant of motion
        l2 = np.asarray(compensator_basis(ops30, 0, 2).operators[1])
        j2 = np.asarray(
            ops30.jx @ ops30.jx + ops30.jy @ ops30.jy + ops30.jz @ ops30.jz
        )
        k = 1j * (l2 @ j2 - j2 @ l2)
        grid = sphere_grid(6, 8)
        field = expectation_field((k + k.conj().T) / 2, grid)
        scale = np.max(np.abs(l2)) * np.max(np.abs(j2))
        assert np.max(np.abs(field.values)) <= 1e-8 * scale

    def test_l1_moves_eastern_hemisphere_east(self, ops30):
        l1 = np.asarray(compensator_basis(ops30, 0, 1).operators[0])
        grid = sphere_grid(61, 48)
        torque = torque_field(l1, grid)
        equator = 30  # theta = pi/2 exactly
        east = np.stack(
            [-np.sin(grid.phis), np.cos(grid.phis), np.zeros_like(grid.phis)], axis=-1
        )
        along = np.einsum("jk,jk->j", torque.values[equator], east)
        scale = np.max(np.abs(along))
        for j, phi in enumerate(grid.phis):
            if abs(np.sin(phi)) <= 1e-9:
                assert abs(along[j]) <= 1e-9 * scale
            else:
                assert np.sign(along[j]) == np.sign(np.sin(phi))


def test_grid_validation():
    with pytest.raises(ValueError):
        sphere_grid(1, 10)
    grid = sphere_grid(4, 6)
    assert grid.values is None
    assert grid.nodes().shape == (24, 2)
