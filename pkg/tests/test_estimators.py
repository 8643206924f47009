import math

import numpy as np
import pytest

from snls_mix.coupling import CouplingConfig, CycleRecord, foias_prodi_pair
from snls_mix.energy import EnergyParams
from snls_mix.estimators import (
    MixingCurve,
    calibrate_lambda,
    check_ito_drift,
    check_stopping_bound,
    contraction_tail,
    coupling_condition_stats,
    default_dictionary,
    dissipation_time,
    estimate_moment_decay,
    fit_rate,
    fp_supermartingale,
    gap_reduction,
    invariant_moment,
    l0_violations,
    marginal_check,
    mixing_curve,
    mixing_curve_from_ensembles,
    simulate_ensemble,
    simulate_pairs,
    smallball_frequency,
    tail_probability,
)
from snls_mix.spectral import SpectralField
from snls_mix.utils.errors import ParameterError

from helpers import make_ensemble, make_sim, random_field


def _curve(times, gaps, stderr=None):
    gaps = np.asarray(gaps, dtype=float).reshape(-1, 1)
    stderr = np.zeros_like(gaps) if stderr is None else np.asarray(stderr, dtype=float).reshape(-1, 1)
    return MixingCurve(times=np.asarray(times, dtype=float), names=["phi"], gaps=gaps, stderr=stderr, n=100)


def _record(k, branch, before, after, **extra):
    fields = dict(k=k, branch=branch, l0_before=before, l0_after=after, H_k=0.1, H_next=0.1, distance=0.0)
    fields.update(extra)
    return CycleRecord(**fields)


# ensembles


def test_ensemble_streams_do_not_depend_on_threads(small_sim, rng):
    u0 = random_field(rng, small_sim.M)
    one = simulate_ensemble(u0, small_sim, 6, seed=5, threads=1)
    many = simulate_ensemble(u0, small_sim, 6, seed=5, threads=3)
    assert np.array_equal(one.H, many.H)
    assert one.stream_ids == list(range(6))
    assert one.H.shape == (6, small_sim.n_steps + 1)


def test_roles_separate_streams(small_sim, rng):
    u0 = random_field(rng, small_sim.M)
    first = simulate_ensemble(u0, small_sim, 3, seed=5, role=0)
    second = simulate_ensemble(u0, small_sim, 3, seed=5, role=1)
    assert not np.array_equal(first.H[:, -1], second.H[:, -1])


def test_pairs_are_row_aligned(small_sim, rng):
    u1, u2 = random_field(rng, small_sim.M), random_field(rng, small_sim.M)
    first, second = simulate_pairs([(u1, u2)], small_sim, 4, seed=1, record_every=5)
    assert first.stream_ids == second.stream_ids
    assert first.H.shape == second.H.shape == (4, 3)


# lyapunov


def test_moment_decay_envelope_holds_for_relaxation(cubic):
    times = np.linspace(0.0, 8.0, 81)
    curve = 5.0 * np.exp(-cubic.alpha * times) + 0.3 * (1 - np.exp(-cubic.alpha * times))
    report = estimate_moment_decay(make_ensemble(np.tile(curve, (4, 1)), times), 1.0, cubic)
    assert report.passed
    assert report.initial == pytest.approx(5.0)
    assert report.C_prime_hat == pytest.approx(2 * np.mean(curve[-20:]))


def test_moment_decay_detects_growth(cubic):
    times = np.linspace(0.0, 4.0, 41)
    curve = 1.0 + times ** 2
    report = estimate_moment_decay(make_ensemble(np.tile(curve, (3, 1)), times), 1.0, cubic)
    assert not report.passed


def test_drift_of_exact_decay_is_not_positive(cubic):
    times = np.linspace(0.0, 5.0, 501)
    rows = np.outer(np.linspace(1.0, 20.0, 10), np.exp(-cubic.alpha * times))
    report = check_ito_drift(make_ensemble(rows, times), 1.0, cubic)
    assert report.passed
    assert len(report.bins) == 10
    # H' = -alpha H, so the compensated rate is -alpha H / 2 up to discretization
    assert all(b.rate < 0 for b in report.bins)


def test_drift_warns_on_small_samples(cubic):
    report = check_ito_drift(make_ensemble(np.ones((2, 5))), 1.0, cubic)
    assert len(report.bins) == 1
    assert report.warnings
    with pytest.raises(ParameterError):
        check_ito_drift(make_ensemble(np.ones((2, 5))), 1.0, EnergyParams(sigma=2.0, lam=-1, alpha=1.0),
                        functional="mass_power")


def test_tail_is_inconclusive_without_exceedances(cubic):
    times = np.linspace(0.0, 1.0, 11)
    report = tail_probability(make_ensemble(np.ones((20, 11)), times), 1.0, cubic, [0.5, 1.0, 2.0], C_prime=1.0)
    assert report.inconclusive
    assert report.probability == [0.0, 0.0, 0.0]


def test_stopping_bound_for_constant_energy():
    report = check_stopping_bound(make_ensemble(np.full((5, 10), 3.0)), 2.0, C_prime=1.0, level=10.0)
    assert report.lhs == pytest.approx(9.0)
    assert report.mean_tau == pytest.approx(9.0)
    assert report.passed


def test_invariant_moment_batches():
    H = np.tile(np.arange(10.0), (4, 1))
    report = invariant_moment(make_ensemble(H), burn_in=5.0)
    assert report.mean == pytest.approx(7.0)
    assert report.stderr == pytest.approx(0.0)
    single = invariant_moment(make_ensemble(H[:1]), burn_in=0.0, n_batches=5)
    assert single.n_batches == 5
    with pytest.raises(ParameterError):
        invariant_moment(make_ensemble(H), burn_in=100.0)


# small ball


def test_dissipation_time():
    assert dissipation_time(1.0, 2.0, 1.0) == 0.0
    assert dissipation_time(math.e ** 2, 1.0, 0.5) == pytest.approx(8.0)
    with pytest.raises(ParameterError):
        dissipation_time(2.0, 1.0, 0.0)


def test_smallball_for_relaxing_pairs():
    times = np.linspace(0.0, 10.0, 101)
    H = np.tile(4.0 * np.exp(-times), (10, 1))
    report = smallball_frequency(make_ensemble(H, times), make_ensemble(H, times), R1=0.5, C_prime_1=0.5,
                                 R0=8.0, alpha=1.0)
    assert report.theta1_hat == pytest.approx(2.0 * math.log(16.0))
    assert report.dissipation_frequency == 0.0
    assert report.frequency[-1] == 1.0
    assert report.passed


# contraction


def test_linear_contraction_rate(linear):
    sim = make_sim(linear, M=8, dt=0.01, T=1.0, n_star=2, scale=0.2)
    rng = np.random.default_rng(2)
    u2 = random_field(rng, 8, active=6)
    u1 = u2 + SpectralField.mode(4, 8, 0.3)
    histories = [foias_prodi_pair(u1, u2, sim, np.random.default_rng(i), record_every=10) for i in range(3)]
    report = contraction_tail(histories, linear)
    assert report.slope == pytest.approx(-linear.alpha, abs=1e-6)
    assert report.passed


def test_equal_pairs_contract_trivially(linear):
    sim = make_sim(linear, M=8, dt=0.01, T=0.2, n_star=2)
    u = SpectralField.mode(3, 8, 0.4)
    histories = [foias_prodi_pair(u, u, sim, np.random.default_rng(i)) for i in range(2)]
    report = contraction_tail(histories, linear)
    assert report.passed
    assert report.slope is None


def test_calibrated_lambda_passes_the_supermartingale_check(cubic):
    sim = make_sim(cubic, M=8, dt=0.01, T=0.5, n_star=2, scale=0.2)
    u2 = SpectralField.mode(1, 8, 0.5)
    u1 = u2 + SpectralField.mode(3, 8, 0.5)
    histories = [foias_prodi_pair(u1, u2, sim, np.random.default_rng(i), record_every=5) for i in range(4)]
    Lambda = calibrate_lambda(histories, 2, cubic, safety=2.0)
    assert Lambda > 0
    assert fp_supermartingale(histories, 2, cubic.model_copy(update={"Lambda": Lambda})).passed
    with pytest.raises(ParameterError):
        fp_supermartingale(histories, 0, cubic)


# mixing


def test_fit_rate_recovers_polynomial_exponent():
    times = np.linspace(0.0, 30.0, 31)
    fit = fit_rate(_curve(times, 0.4 * (1 + times) ** -2.0))
    assert not fit.inconclusive
    assert fit.q_hat == pytest.approx(2.0, abs=0.05)
    assert fit.positive
    assert not fit.super_polynomial


def test_fit_rate_flags_exponential_decay():
    times = np.linspace(0.0, 20.0, 41)
    fit = fit_rate(_curve(times, np.exp(-times)))
    assert fit.super_polynomial


def test_fit_rate_needs_points_above_the_noise_floor():
    times = np.linspace(0.0, 10.0, 11)
    fit = fit_rate(_curve(times, np.full(11, 0.01), stderr=np.full(11, 0.01)))
    assert fit.inconclusive
    assert fit.q_hat is None


def test_gap_reduction():
    times = np.linspace(0.0, 10.0, 11)
    curve = _curve(times, 1.0 / (1 + times))
    ratio, passed = gap_reduction(curve, 9.0, 5.0)
    assert ratio == pytest.approx(10.0)
    assert passed
    assert not gap_reduction(curve, 2.0, 5.0)[1]


def test_dictionary_is_bounded():
    dictionary = default_dictionary(n_low=2)
    assert len(dictionary) == 10
    low = np.full((3, 2, 2), 7.0 - 9.0j)
    ensemble = make_ensemble(np.full((3, 2), 1e6), low=low, mass=np.full((3, 2), 1e6))
    for phi in dictionary.values():
        assert np.all(np.abs(phi(ensemble)) <= 0.5 + 1e-15)


def test_identical_starts_give_zero_gaps(small_sim, rng):
    u0 = random_field(rng, small_sim.M)
    curve = mixing_curve(u0, u0, small_sim, 5, seed=3)
    assert np.all(curve.gaps == 0.0)
    assert np.all(curve.stderr == 0.0)


def test_initial_gap_of_energy_functional(small_sim):
    u1, u2 = SpectralField.mode(1, small_sim.M, 0.1), SpectralField.mode(1, small_sim.M, 0.3)
    first = simulate_ensemble(u1, small_sim, 4, seed=0)
    second = simulate_ensemble(u2, small_sim, 4, seed=0)
    curve = mixing_curve_from_ensembles(first, second, paired=True)
    j = curve.names.index("H")
    expected = 0.5 * abs(first.H[0, 0] - second.H[0, 0]) / 10.0
    assert curve.gaps[0, j] == pytest.approx(expected)
    assert curve.stderr[0, j] == pytest.approx(0.0)


# coupling conditions


def test_l0_violations():
    good = [
        _record(0, "Va", None, 1, binding_success=True),
        _record(1, "Vb", 1, 1),
        _record(2, "Vb", 1, None),
        _record(3, "V0", None, None),
    ]
    assert l0_violations(good) == 0
    assert l0_violations([_record(0, "Vb", None, 1)]) == 1
    assert l0_violations([_record(0, "Va", None, 3)]) == 1
    assert l0_violations([_record(0, "V0", None, None), _record(2, "V0", None, None)]) == 1


def test_condition_stats_without_decoupling():
    cfg = CouplingConfig(T=1.0, d0=0.5, R0=5.0, N_star=2)
    log = [_record(0, "Va", None, 1, binding_success=True)]
    log += [_record(k, "Vb", 1, 1, coupled_duration=k - 1, distance=1.0 / k) for k in range(1, 8)]
    report = coupling_condition_stats([log], cfg)
    assert report.l0_violations == 0
    assert report.decoupling_frequency == [0.0] * 7
    assert report.decoupling_monotone
    assert report.binding_success == 1.0
    assert report.C0 == pytest.approx(1.0)
    assert report.envelope_violation_rate == 0.0
    assert report.warnings


def test_condition_stats_need_records():
    with pytest.raises(ParameterError):
        coupling_condition_stats([[]], CouplingConfig(T=1.0, R0=5.0, N_star=2))


def test_marginal_check():
    rng = np.random.default_rng(0)
    times = np.arange(5.0)
    H = rng.uniform(0.0, 10.0, size=(400, 5))
    low = (rng.standard_normal((400, 5, 2)) + 1j * rng.standard_normal((400, 5, 2))) * 0.3
    same = make_ensemble(H, times, low=low, mass=H / 10)
    report = marginal_check(same, same)
    assert report.passed and report.outliers == 0

    shifted = make_ensemble(H + 3.0, times, low=low + 0.5, mass=H / 10 + 0.5)
    assert not marginal_check(shifted, same).passed
