import math

import numpy as np
import pytest
from pydantic import ValidationError

from snls_mix.energy import EnergyParams, h_star_values
from snls_mix.integrator import (
    BlowUpError,
    ContractError,
    SimConfig,
    phi_reconstruct,
    read_snapshot,
    simulate,
    split_low_high,
    step,
    write_snapshot,
)
from snls_mix.noise import WienerIncrement
from snls_mix.spectral import SpectralField, get_basis

from helpers import make_noise, make_sim, random_field


def _deterministic(params, M, dt, T):
    return SimConfig(M=M, dt=dt, T=T, params=params, noise=make_noise(M, 1, scale=0.0))


def test_config_rejects_short_horizon(cubic):
    with pytest.raises(ValidationError):
        SimConfig(M=8, dt=0.1, T=0.05, params=cubic, noise=make_noise(8, 1))
    with pytest.raises(ValidationError):
        SimConfig(M=8, dt=0.1, T=1.0, params=cubic, noise=make_noise(4, 1))


def test_step_count_rounds_up(cubic):
    assert make_sim(cubic, dt=0.1, T=1.0).n_steps == 10
    assert make_sim(cubic, dt=0.3, T=1.0).n_steps == 4


def test_undamped_unforced_flow_conserves_mass_and_energy():
    params = EnergyParams(sigma=1.0, lam=-1, alpha=0.0)
    sim = _deterministic(params, 32, 1e-3, 1.0)
    u0 = SpectralField.mode(1, 32, 0.5) + SpectralField.mode(2, 32, 0.25j)
    traj = simulate(u0, sim, np.random.default_rng(0), record_every=50)
    mass = get_basis(32).mass_sq(traj.states)
    energy = h_star_values(traj.states, params)
    assert np.max(np.abs(np.sqrt(mass) - math.sqrt(mass[0]))) < 1e-8
    assert np.max(np.abs(energy - energy[0])) < 1e-4


def test_linear_damped_flow_is_exact(linear):
    sim = _deterministic(linear, 8, 0.01, 0.5)
    u0 = SpectralField.mode(3, 8, 1.0 + 1.0j)
    traj = simulate(u0, sim, np.random.default_rng(0))
    mu = (3 * math.pi) ** 2
    # the sigma = 0 rotation is the uniform phase exp(i lambda dt)
    expected = (1.0 + 1.0j) * np.exp((-1j * mu - linear.alpha + 1j * linear.lam) * traj.times)
    assert np.allclose(traj.states[:, 2], expected, atol=1e-12)


def test_strang_splitting_is_second_order():
    params = EnergyParams(sigma=1.0, lam=-1, alpha=0.1)
    u0 = SpectralField.mode(1, 16, 1.0) + SpectralField.mode(2, 16, 0.5)

    def final(dt):
        return simulate(u0, _deterministic(params, 16, dt, 0.2), np.random.default_rng(0)).states[-1]

    coarse, medium, fine = final(0.002), final(0.001), final(0.0005)
    order = math.log2(np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine))
    assert 1.7 < order < 2.3


def test_simulate_is_reproducible(small_sim, rng):
    u0 = random_field(rng, small_sim.M)
    first = simulate(u0, small_sim, np.random.default_rng(11))
    second = simulate(u0, small_sim, np.random.default_rng(11))
    assert np.array_equal(first.states, second.states)


def test_step_replays_simulate(small_sim, rng):
    u0 = random_field(rng, small_sim.M)
    traj = simulate(u0, small_sim, np.random.default_rng(3), record_noise=True)
    u = u0
    for k in range(small_sim.n_steps):
        u = step(u, small_sim.dt, WienerIncrement(delta_w=traj.noise_record[k], dt=small_sim.dt), small_sim)
    assert np.allclose(u.coeffs, traj.final.coeffs, atol=1e-14)


def test_step_rejects_mismatched_increment(small_sim):
    u = SpectralField.zeros(small_sim.M)
    with pytest.raises(ContractError):
        step(u, small_sim.dt, WienerIncrement(delta_w=np.zeros(small_sim.M), dt=2 * small_sim.dt), small_sim)


def test_control_above_forced_modes_is_rejected(small_sim):
    h = np.zeros((small_sim.n_steps, small_sim.M), dtype=np.complex128)
    h[:, small_sim.n_star] = 1.0
    with pytest.raises(ContractError):
        simulate(SpectralField.zeros(small_sim.M), small_sim, np.random.default_rng(0), h=h)


def test_control_enters_linearly(linear):
    sim = _deterministic(linear, 8, 0.01, 0.05)
    h = np.zeros((sim.n_steps, 8), dtype=np.complex128)
    h[:, 0] = 2.0
    free = simulate(SpectralField.zeros(8), sim, np.random.default_rng(0))
    driven = simulate(SpectralField.zeros(8), sim, np.random.default_rng(0), h=h)
    assert abs(driven.states[1, 0] - free.states[1, 0]) == pytest.approx(2.0 * sim.dt)


def test_non_finite_noise_blows_up(small_sim):
    path = np.zeros((small_sim.n_steps, small_sim.M), dtype=np.complex128)
    path[3, 0] = np.nan
    with pytest.raises(BlowUpError) as info:
        simulate(SpectralField.zeros(small_sim.M), small_sim, noise_path=path)
    assert info.value.step == 4


def test_record_every_thins_the_grid(small_sim):
    traj = simulate(SpectralField.zeros(small_sim.M), small_sim, np.random.default_rng(0), record_every=5)
    assert len(traj) == 3
    assert np.allclose(traj.times, [0.0, 0.05, 0.1])


def test_reconstruction_matches_simulated_high_modes(small_sim, rng):
    u0 = random_field(rng, small_sim.M, active=6)
    traj = simulate(u0, small_sim, np.random.default_rng(8), record_noise=True)
    low, high = split_low_high(traj, small_sim.n_star)
    y = phi_reconstruct(low, traj.noise_record, u0, small_sim)
    assert np.allclose(y, high, atol=1e-12)
    assert np.allclose(low + high, traj.states)


def test_reconstruction_is_non_anticipative(small_sim, rng):
    u0 = random_field(rng, small_sim.M, active=6)
    traj = simulate(u0, small_sim, np.random.default_rng(9), record_noise=True)
    low, _ = split_low_high(traj, small_sim.n_star)
    full = phi_reconstruct(low, traj.noise_record, u0, small_sim)
    prefix = phi_reconstruct(low[:5], traj.noise_record[:4], u0, small_sim)
    assert np.array_equal(full[:5], prefix)


def test_reconstruction_checks_alignment(small_sim):
    with pytest.raises(ContractError):
        phi_reconstruct(np.zeros((4, small_sim.M)), np.zeros((4, small_sim.M)), SpectralField.zeros(small_sim.M),
                        small_sim)


def test_snapshot_round_trip(tmp_path, small_sim, rng):
    traj = simulate(random_field(rng, small_sim.M), small_sim, np.random.default_rng(4), record_every=2, seed=99)
    path = write_snapshot(tmp_path / "run.snap", traj, small_sim)
    header, back = read_snapshot(path)
    assert header["M"] == small_sim.M
    assert header["seed"] == 99
    assert header["params"]["lambda"] == -1
    assert np.array_equal(back.states, traj.states)
    assert np.allclose(back.times, traj.times)


def test_snapshot_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.bin"
    path.write_bytes(b"not a snapshot")
    with pytest.raises(ContractError):
        read_snapshot(path)
