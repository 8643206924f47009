import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from snls_mix.coupling import (
    CouplingConfig,
    CouplingState,
    InvertibilityError,
    ResidualSamplingError,
    build_control,
    coupled_cycle,
    foias_prodi_pair,
    girsanov_logdensity,
    initial_state,
    maximal_coupling,
    read_cycle_log,
    run_coupled_chain,
    standard_increments,
    tv_upper_bound,
    write_cycle_log,
)
from snls_mix.estimators import chain_ensemble, l0_violations, marginal_check, simulate_ensemble
from snls_mix.integrator import ContractError, simulate
from snls_mix.noise import NoiseOperator, increment_batch
from snls_mix.spectral import SpectralField
from snls_mix.utils.errors import ParameterError
from snls_mix.utils.helpers import read_artifact_header

from helpers import make_sim, random_field


def _normal_logpdf(mean):
    return lambda z: -0.5 * (z - mean) ** 2


@pytest.mark.parametrize("shift", [0.5, 1.0, 2.0])
def test_maximal_coupling_of_shifted_gaussians(shift):
    rng = np.random.default_rng(21)
    n = 4000
    draws = [
        maximal_coupling(_normal_logpdf(0.0), _normal_logpdf(shift),
                         lambda r: r.normal(0.0, 1.0), lambda r: r.normal(shift, 1.0), rng)
        for _ in range(n)
    ]
    unequal = np.mean([not d.equal for d in draws])
    tv = 2 * stats.norm.cdf(shift / 2) - 1
    assert abs(unequal - tv) < 3 * math.sqrt(tv * (1 - tv) / n)
    assert abs(np.mean([d.z1 for d in draws])) < 4 / math.sqrt(n)
    assert abs(np.mean([d.z2 for d in draws]) - shift) < 4 / math.sqrt(n)
    assert all(d.z1 == d.z2 for d in draws if d.equal)


def _uniform_logpdf(low, high):
    return lambda z: 0.0 if low <= z <= high else -math.inf


def test_disjoint_supports_never_couple(rng):
    for _ in range(200):
        draw = maximal_coupling(_uniform_logpdf(0.0, 1.0), _uniform_logpdf(2.0, 3.0),
                                lambda r: r.uniform(0.0, 1.0), lambda r: r.uniform(2.0, 3.0), rng)
        assert not draw.equal
        assert 0.0 <= draw.z1 <= 1.0 and 2.0 <= draw.z2 <= 3.0
        assert draw.attempts == 1


def test_identical_laws_always_couple(rng):
    for _ in range(200):
        draw = maximal_coupling(_normal_logpdf(0.0), _normal_logpdf(0.0),
                                lambda r: r.normal(), lambda r: r.normal(), rng)
        assert draw.equal and draw.attempts == 0


def test_residual_loop_is_capped(rng):
    # the proposal always fails and the residual never accepts
    with pytest.raises(ResidualSamplingError):
        maximal_coupling(lambda z: 0.0, lambda z: -math.inf if z == 0.0 else 0.0,
                         lambda r: 0.0, lambda r: 1.0, rng, max_attempts=5)


def test_tv_upper_bound_for_gaussian_shift():
    delta = 0.5
    x = np.random.default_rng(2).standard_normal(20000)
    bound = tv_upper_bound(delta * x - delta ** 2 / 2)
    expected = 0.5 * math.sqrt(math.exp(delta ** 2) - 1)
    assert abs(bound.value - expected) < 5 * bound.stderr
    assert bound.value >= 2 * stats.norm.cdf(delta / 2) - 1
    with pytest.raises(ParameterError):
        tv_upper_bound([])


def test_girsanov_matches_gaussian_likelihood_ratio():
    dt = 0.01
    noise = NoiseOperator(b_coeffs=[0.5, 2.0, 0.1], n_star=2)
    beta = standard_increments(2, dt, np.random.default_rng(4), 6)
    h = np.zeros((6, 3), dtype=np.complex128)
    h[:, 0] = 0.3 - 0.2j
    h[:, 1] = -1.0
    g = h[:, :2] / noise.b_coeffs[:2]
    scale = math.sqrt(dt / 2)
    expected = 0.0
    for part in (np.real, np.imag):
        expected += np.sum(stats.norm.logpdf(part(beta), loc=part(g) * dt, scale=scale)
                           - stats.norm.logpdf(part(beta), loc=0.0, scale=scale))
    assert girsanov_logdensity(h, beta, noise, dt) == pytest.approx(expected, rel=1e-12)


def test_girsanov_needs_forced_modes():
    noise = NoiseOperator(b_coeffs=[0.0, 1.0], n_star=2)
    with pytest.raises(InvertibilityError):
        girsanov_logdensity(np.zeros((1, 2)), np.zeros((1, 2)), noise, 0.1)


def test_lyapunov_cap_and_state_validation(small_sim):
    cfg = CouplingConfig(T=1.0, d0=0.5, R0=2.0, kappa=1.0, B=2.0, N_star=2)
    assert cfg.lyapunov_cap(1.0, 3.0) == pytest.approx(2.0 + 0.5 ** 4 + 0.5 ** 8 + 6.0)
    zero = SpectralField.zeros(small_sim.M)
    with pytest.raises(ValidationError):
        CouplingState(k=1, l0=2, u1=zero, u2=zero)
    with pytest.raises(ValidationError):
        CouplingConfig(T=1.0, d0=1.0, R0=0.5, N_star=2)


def test_binding_control_matches_terminal_low_modes(cubic, coupling_cfg):
    sim = make_sim(cubic, M=16, dt=0.01, T=0.1, n_star=2, scale=0.5)
    rng = np.random.default_rng(6)
    n = 10
    beta2 = standard_increments(2, sim.dt, rng, n)
    eta = increment_batch(sim.noise.b_coeffs, sim.dt, rng, n)
    path = eta.copy()
    path[:, :2] = sim.noise.b_coeffs[:2] * beta2
    u2 = simulate(random_field(rng, 16, amplitude=0.3), sim, noise_path=path)
    u1_start = random_field(rng, 16, amplitude=0.3).coeffs

    control = build_control(u1_start, u2.states, beta2, eta, sim, coupling_cfg)
    assert np.array_equal(control.u1[0], u1_start)
    assert np.array_equal(control.u1[-1, :2], u2.states[-1, :2])
    assert np.all(control.h[:, 2:] == 0)
    assert control.bound_ratios.shape == (n,)


def test_identical_pair_stays_coupled(cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2, scale=0.1)
    cfg = CouplingConfig(T=0.5, d0=0.5, R0=5.0, N_star=2)
    zero = SpectralField.zeros(8)
    assert initial_state(zero, zero, sim, cfg).l0 == 0
    chain = run_coupled_chain(zero, zero, sim, cfg, 6, np.random.default_rng(1))
    for record in chain.records:
        assert record.branch == "Vb"
        assert record.l0_after == 0
        assert record.distance == 0.0
        assert record.failed_clause is None
    assert np.array_equal(chain.u1, chain.u2)


def test_l0_bookkeeping_along_a_chain(cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2, scale=0.3)
    cfg = CouplingConfig(T=0.5, d0=0.5, R0=5.0, N_star=2, max_attempts=100000)
    u1 = SpectralField.mode(1, 8, 0.2)
    u2 = SpectralField.mode(1, 8, -0.1) + SpectralField.mode(2, 8, 0.1j)
    chain = run_coupled_chain(u1, u2, sim, cfg, 12, np.random.default_rng(3))
    assert len(chain.records) == 12
    assert l0_violations(chain.records) == 0
    for record in chain.records:
        if record.l0_after is not None:
            assert np.array_equal(chain.u1[record.k + 1, :2], chain.u2[record.k + 1, :2])
        if record.branch == "Va":
            assert record.binding_success is not None


def test_large_energy_takes_the_shared_noise_branch(cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2)
    cfg = CouplingConfig(T=0.5, d0=0.5, R0=1.0, N_star=2)
    state = initial_state(SpectralField.mode(1, 8, 2.0), SpectralField.zeros(8), sim, cfg)
    new_state, record = coupled_cycle(state, sim, cfg, np.random.default_rng(0))
    assert record.branch == "V0"
    assert record.l0_after is None and new_state.l0 is None
    assert new_state.k == 1


def test_cycle_length_must_fit_the_grid(cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2)
    zero = SpectralField.zeros(8)
    misaligned = CouplingConfig(T=0.125, R0=5.0, N_star=2)
    with pytest.raises(ContractError):
        coupled_cycle(initial_state(zero, zero, sim, misaligned), sim, misaligned, np.random.default_rng(0))
    wrong_modes = CouplingConfig(T=0.5, R0=5.0, N_star=3)
    with pytest.raises(ContractError):
        coupled_cycle(initial_state(zero, zero, sim, wrong_modes), sim, wrong_modes, np.random.default_rng(0))


def test_cycle_log_round_trip(tmp_path, cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2)
    cfg = CouplingConfig(T=0.5, R0=5.0, N_star=2, max_attempts=100000)
    chain = run_coupled_chain(SpectralField.mode(1, 8, 0.3), SpectralField.zeros(8), sim, cfg, 4,
                              np.random.default_rng(8), log_path=tmp_path / "chain.jsonl")
    assert [r.model_dump() for r in read_cycle_log(tmp_path / "chain.jsonl")] == [r.model_dump() for r in chain.records]
    path = write_cycle_log(chain.records[:2], tmp_path / "short.jsonl")
    assert len(read_cycle_log(path)) == 2


def test_foias_prodi_pair_contracts_exactly_in_the_linear_case(linear):
    sim = make_sim(linear, M=8, dt=0.01, T=0.5, n_star=2, scale=0.2)
    rng = np.random.default_rng(12)
    u2 = random_field(rng, 8, active=6)
    u1 = u2 + SpectralField.mode(3, 8, 0.5) + SpectralField.mode(5, 8, -0.2j)
    history = foias_prodi_pair(u1, u2, sim, rng, record_every=5)
    assert np.array_equal(history.u1[:, :2], history.u2[:, :2])
    norms = np.linalg.norm(history.r, axis=1)
    assert np.allclose(norms, norms[0] * np.exp(-linear.alpha * history.times), rtol=1e-10)


def test_foias_prodi_pair_needs_equal_low_modes(linear, rng):
    sim = make_sim(linear, M=8, n_star=2)
    with pytest.raises(ContractError):
        foias_prodi_pair(SpectralField.mode(1, 8), SpectralField.zeros(8), sim, rng)


def test_exceeding_the_lyapunov_cap_ends_the_epoch(cubic):
    # strong forcing drives H^4 far above the cap 1 + d0^4 + d0^8 within one cycle
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2, scale=5.0)
    cfg = CouplingConfig(T=0.5, d0=0.5, R0=5.0, kappa=0.0, B=0.0, N_star=2)
    zero = SpectralField.zeros(8)
    state = initial_state(zero, zero, sim, cfg)
    assert state.l0 == 0
    new_state, record = coupled_cycle(state, sim, cfg, np.random.default_rng(5))
    assert record.branch == "Vb"
    assert record.clauses["equal_low"] and record.clauses["small_H_l"]
    assert record.clauses["lyapunov_cap"] is False
    assert record.failed_clause == "lyapunov_cap"
    assert record.l0_after is None and new_state.l0 is None
    assert new_state.k == 1


def test_successful_binding_starts_an_epoch(cubic):
    # weak noise keeps H_{k+1} below d0; a tiny low-mode gap makes the shift nearly free
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2, scale=0.02)
    cfg = CouplingConfig(T=0.5, d0=0.5, R0=5.0, N_star=2, max_attempts=100000)
    state = initial_state(SpectralField.mode(1, 8, 1e-8), SpectralField.zeros(8), sim, cfg)
    assert state.l0 is None
    new_state, record = coupled_cycle(state, sim, cfg, np.random.default_rng(9))
    assert record.branch == "Va"
    assert record.binding_success is True and record.accepted is True
    assert record.H_next <= cfg.d0
    assert record.l0_after == 1 and new_state.l0 == 1
    assert np.array_equal(new_state.u1.coeffs[:2], new_state.u2.coeffs[:2])
    assert new_state.coupled


def test_coupled_chains_keep_the_marginal_laws(cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.25, n_star=2, scale=0.3)
    cfg = CouplingConfig(T=0.25, d0=0.5, R0=5.0, N_star=2, max_attempts=100000)
    u1, u2 = SpectralField.mode(1, 8, 0.3), SpectralField.zeros(8)
    n, n_cycles, seed = 200, 3, 31
    chains = [run_coupled_chain(u1, u2, sim, cfg, n_cycles, np.random.default_rng([seed, i])) for i in range(n)]
    horizon = make_sim(cubic, M=8, dt=0.05, T=n_cycles * cfg.T, n_star=2, scale=0.3)
    for member, start in ((1, u1), (2, u2)):
        plain = simulate_ensemble(start, horizon, n, seed, role=member, record_every=5)
        coupled = chain_ensemble(chains, member, cubic, cfg.T, seed)
        report = marginal_check(coupled, plain)
        assert report.n_tests > 0
        assert report.passed


def test_cycle_log_embeds_seed_and_config(tmp_path, cubic):
    sim = make_sim(cubic, M=8, dt=0.05, T=0.5, n_star=2)
    cfg = CouplingConfig(T=0.5, R0=5.0, N_star=2, max_attempts=100000)
    config = {"coupling": cfg.model_dump()}
    chain = run_coupled_chain(SpectralField.mode(1, 8, 0.3), SpectralField.zeros(8), sim, cfg, 2,
                              np.random.default_rng(8), log_path=tmp_path / "chain.jsonl", seed=8, config=config)
    first = (tmp_path / "chain.jsonl").read_text().splitlines()[0]
    assert read_artifact_header(first) == {"seed": 8, "config": config}
    assert [r.model_dump() for r in read_cycle_log(tmp_path / "chain.jsonl")] == [r.model_dump() for r in chain.records]
