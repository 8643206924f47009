"""
Inductive coupling construction

Each cycle [kT, (k+1)T] takes one of three branches:
    V0  no coupling in force and H_k > R0: both trajectories share the whole Wiener path
    Va  no coupling in force and H_k <= R0: binding attempt through a maximal coupling of
        trajectory 1's low-mode noise with the feedback-shifted noise of trajectory 2
    Vb  coupling in force: low modes kept equal by the compensating shift, (P_{l,k}) checked
Both trajectories always share the high-mode increments eta in Va and Vb.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..energy import LyapunovAccumulator, PairHistory, energy_values, lyapunov_advance, power
from ..integrator import ContractError, SimConfig, get_stepper, phi_reconstruct, simulate
from ..noise import increment_batch
from ..spectral import SpectralField, get_basis
from ..utils.helpers import artifact_header, make_json_serializable
from .control import CompensatingController, FeedbackController, PathDraw, co_simulate
from .girsanov import sigma_l_inverse, standard_increments
from .maximal import maximal_coupling
from .schemas import CouplingConfig, CouplingState, CycleDiagnostics, CycleRecord

CLAUSES = ("equal_low", "equal_eta", "small_H_l", "lyapunov_cap")


class CoupledChain(BaseModel):
    """A coupled pair run for several cycles"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    records: List[CycleRecord]
    u1: np.ndarray  # (n_cycles + 1, M) states at cycle boundaries
    u2: np.ndarray
    final: CouplingState


def _steps_per_cycle(sim: SimConfig, cfg: CouplingConfig) -> int:
    n = int(round(cfg.T / sim.dt))
    if n < 1 or abs(n * sim.dt - cfg.T) > 1e-9 * cfg.T:
        raise ContractError(f"cycle length T={cfg.T} is not a multiple of dt={sim.dt}")
    return n


def _check_dimensions(sim: SimConfig, cfg: CouplingConfig) -> None:
    if cfg.N_star != sim.n_star:
        raise ContractError(f"coupling N_star={cfg.N_star} differs from noise n_star={sim.n_star}")
    sigma_l_inverse(sim.noise)


def _pair_energy(u1: np.ndarray, u2: np.ndarray, sim: SimConfig) -> Tuple[float, float]:
    values = energy_values(np.stack([u1, u2]), sim.params)
    return float(values[0]), float(values[1])


def _distance(u1: np.ndarray, u2: np.ndarray) -> float:
    return float(np.sqrt(get_basis(u1.size).gradient_sq(u1 - u2)))


def _restart_accumulator(h_value: float, sim: SimConfig, t: float) -> LyapunovAccumulator:
    k = sim.params.lyapunov_power
    return LyapunovAccumulator(k=k, current=power(h_value, k), integral=0.0, t0=t, t=t)


def initial_state(u1: SpectralField, u2: SpectralField, sim: SimConfig, cfg: CouplingConfig) -> CouplingState:
    """
    Coupling state at time 0

    l0 = 0 when the low modes already agree and H_0 <= d0, otherwise infinity.
    """
    N = cfg.N_star
    h1, h2 = _pair_energy(u1.coeffs, u2.coeffs, sim)
    if np.array_equal(u1.coeffs[:N], u2.coeffs[:N]) and h1 + h2 <= cfg.d0:
        return CouplingState(k=0, l0=0, u1=u1, u2=u2, H_l=h1 + h2,
                             lyap1=_restart_accumulator(h1, sim, 0.0), lyap2=_restart_accumulator(h2, sim, 0.0))
    return CouplingState(k=0, l0=None, u1=u1, u2=u2)


def _shifted_noise_coupling(u1_0: np.ndarray, u2_0: np.ndarray, controller, sim: SimConfig,
                            cfg: CouplingConfig, n: int, rng: np.random.Generator):
    """
    Maximal coupling of nu (trajectory 1's low-mode noise law) with S#nu

    Trajectory 2's noise xi ~ nu is drawn first; z1 = S(xi) is the proposal.
    Densities are taken relative to nu: log rho(S#nu) = Girsanov log-density, log rho(nu) = 0.
    """
    N = cfg.N_star
    stepper = get_stepper(sim.M, sim.dt, sim.params)
    eta = increment_batch(sim.noise.b_coeffs, sim.dt, rng, n)

    def propose(stream: np.random.Generator) -> PathDraw:
        xi = standard_increments(N, sim.dt, stream, n)
        return co_simulate(u1_0, u2_0, xi, eta, controller, stepper, sim.noise, "forward")

    def residual(stream: np.random.Generator) -> PathDraw:
        y = standard_increments(N, sim.dt, stream, n)
        return co_simulate(u1_0, u2_0, y, eta, controller, stepper, sim.noise, "inverse")

    draw = maximal_coupling(lambda z: z.log_density, lambda z: 0.0, propose, residual, rng, cfg.max_attempts)
    proposal: PathDraw = draw.z1
    u1_path = proposal.u1 if draw.equal else draw.z2.u1
    return draw, proposal, proposal.u2, u1_path, eta


def _branch_v0(u1: np.ndarray, u2: np.ndarray, sim: SimConfig, n: int, rng: np.random.Generator):
    stepper = get_stepper(sim.M, sim.dt, sim.params)
    increments = increment_batch(sim.noise.b_coeffs, sim.dt, rng, n)
    pair = np.stack([u1, u2])
    for k in range(n):
        pair = stepper.advance(pair, increments[k])
    return pair[0], pair[1]


def _lyapunov_clause(state: CouplingState, u1_path: np.ndarray, u2_path: np.ndarray, sim: SimConfig,
                     cfg: CouplingConfig) -> Tuple[bool, LyapunovAccumulator, LyapunovAccumulator]:
    """Advance both accumulators on the stride grid and compare with the (P_{l,k}) cap"""
    n = u1_path.shape[0] - 1
    indices = list(range(cfg.lyapunov_stride, n + 1, cfg.lyapunov_stride))
    if not indices or indices[-1] != n:
        indices.append(n)
    h1 = energy_values(u1_path[indices], sim.params)
    h2 = energy_values(u2_path[indices], sim.params)
    lyap1, lyap2 = state.lyap1, state.lyap2
    t_start = state.k * cfg.T
    l_time = state.l0 * cfg.T
    previous, ok = 0, True
    for j, index in enumerate(indices):
        span = (index - previous) * sim.dt
        lyap1 = lyapunov_advance(lyap1, float(h1[j]), span, sim.params.alpha)
        lyap2 = lyapunov_advance(lyap2, float(h2[j]), span, sim.params.alpha)
        cap = cfg.lyapunov_cap(sim.params.sigma, t_start + index * sim.dt - l_time)
        if lyap1.value > cap or lyap2.value > cap:
            ok = False
        previous = index
    return ok, lyap1, lyap2


def l0_update(state: CouplingState, diag: CycleDiagnostics, sim: SimConfig, cfg: CouplingConfig) -> CouplingState:
    """
    Maintain l0(k+1) = min{l <= k+1 : (P_{l,k+1}) holds}

    A successful binding starts a new epoch at k+1 when H_{k+1} <= d0; a coupled
    cycle keeps its epoch only when every clause held; a V0 cycle leaves l0 at infinity.
    """
    k_next = state.k + 1
    t_next = k_next * cfg.T
    if diag.branch == "Vb" and state.coupled and all(diag.clauses.get(c, False) for c in CLAUSES):
        return CouplingState(k=k_next, l0=state.l0, u1=diag.u1, u2=diag.u2, H_l=state.H_l,
                             lyap1=diag.lyap1, lyap2=diag.lyap2)
    if diag.branch == "Va" and diag.binding_success and diag.H_next <= cfg.d0:
        return CouplingState(k=k_next, l0=k_next, u1=diag.u1, u2=diag.u2, H_l=diag.H_next,
                             lyap1=_restart_accumulator(diag.H1_next, sim, t_next),
                             lyap2=_restart_accumulator(diag.H2_next, sim, t_next))
    return CouplingState(k=k_next, l0=None, u1=diag.u1, u2=diag.u2)


def coupled_cycle(state: CouplingState, sim: SimConfig, cfg: CouplingConfig,
                  rng: np.random.Generator) -> Tuple[CouplingState, CycleRecord]:
    """
    Advance the coupled pair over one cycle and apply l0_update

    Args:
        state: Pair state at time kT
        sim: Simulation config (dt, equation, noise)
        cfg: Coupling config
        rng: Random stream owned by this pair

    Returns:
        (state at (k+1)T, cycle record)
    """
    _check_dimensions(sim, cfg)
    n = _steps_per_cycle(sim, cfg)
    N = cfg.N_star
    u1, u2 = state.u1.coeffs, state.u2.coeffs
    if state.coupled and not np.array_equal(u1[:N], u2[:N]):
        raise ContractError("coupled state with unequal low modes")
    h1, h2 = _pair_energy(u1, u2, sim)
    H_k = h1 + h2
    record = dict(k=state.k, l0_before=state.l0, H_k=H_k,
                  coupled_duration=state.k - state.l0 if state.coupled else None)

    if state.coupled:
        branch = "Vb"
        controller = CompensatingController(N, sim.dt, sim.params, cfg.k0, clip=True)
    elif H_k <= cfg.R0:
        branch = "Va"
        controller = FeedbackController(N, sim.dt, sim.params, cfg.k0, cfg.gain, n, clip=True)
    else:
        branch = "V0"
        controller = None

    clauses, success, lyap1, lyap2 = {}, False, None, None
    if controller is None:
        end1, end2 = _branch_v0(u1, u2, sim, n, rng)
    else:
        draw, proposal, u2_path, u1_path, eta = _shifted_noise_coupling(u1, u2, controller, sim, cfg, n, rng)
        bound_ok = bool(np.all(proposal.bound_ratios <= 1.0))
        if draw.equal and branch == "Va" and bound_ok:
            # high modes of trajectory 1 from its own low modes and the shared eta
            y1 = phi_reconstruct(_low(u1_path, N), eta, SpectralField(coeffs=u1), sim)
            u1_path = u1_path.copy()
            u1_path[:, N:] = y1[:, N:]
        end1, end2 = u1_path[-1].copy(), u2_path[-1].copy()
        success = bool(draw.equal and bound_ok)
        record.update(accepted=draw.equal, log_density=proposal.log_density, attempts=draw.attempts,
                      bound_violations=int(np.count_nonzero(proposal.bound_ratios > 1.0)),
                      max_bound_ratio=float(np.max(proposal.bound_ratios, initial=0.0)),
                      terminal_gap=proposal.terminal_gap, binding_success=success if branch == "Va" else None)
        if branch == "Vb":
            clauses["equal_low"] = success and np.array_equal(end1[:N], end2[:N])
            clauses["equal_eta"] = True
            clauses["small_H_l"] = state.H_l is not None and state.H_l <= cfg.d0
            if clauses["equal_low"]:
                clauses["lyapunov_cap"], lyap1, lyap2 = _lyapunov_clause(state, u1_path, u2_path, sim, cfg)
            else:
                clauses["lyapunov_cap"] = False

    n1, n2 = _pair_energy(end1, end2, sim)
    diag = CycleDiagnostics(branch=branch, u1=SpectralField(coeffs=end1), u2=SpectralField(coeffs=end2),
                            H1_next=n1, H2_next=n2, binding_success=success, clauses=clauses,
                            lyap1=lyap1, lyap2=lyap2)
    new_state = l0_update(state, diag, sim, cfg)
    failed = next((c for c in CLAUSES if c in clauses and not clauses[c]), None)
    cycle = CycleRecord(branch=branch, l0_after=new_state.l0, H_next=n1 + n2, distance=_distance(end1, end2),
                        clauses=clauses, failed_clause=failed, **record)
    logger.debug("Cycle done", k=state.k, branch=branch, l0=new_state.l0, H_k=H_k, failed=failed)
    return new_state, cycle


def _low(path: np.ndarray, N: int) -> np.ndarray:
    out = np.zeros_like(path)
    out[:, :N] = path[:, :N]
    return out


def write_cycle_log(records: List[CycleRecord], path: Union[str, Path], seed: Optional[int] = None,
                    config: Optional[Dict[str, Any]] = None) -> Path:
    """
    One JSON object per line, l0 = infinity written as null

    With a seed or config, the first line is the artifact header "# {seed, config}".
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        if seed is not None or config is not None:
            fh.write(artifact_header(seed, config) + "\n")
        for record in records:
            fh.write(json.dumps(make_json_serializable(record.model_dump())) + "\n")
    return path


def read_cycle_log(path: Union[str, Path]) -> List[CycleRecord]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [CycleRecord.model_validate_json(line) for line in fh if line.strip() and not line.startswith("#")]


def run_coupled_chain(u0_1: SpectralField, u0_2: SpectralField, sim: SimConfig, cfg: CouplingConfig,
                      n_cycles: int, rng: np.random.Generator,
                      log_path: Optional[Union[str, Path]] = None, seed: Optional[int] = None,
                      config: Optional[Dict[str, Any]] = None) -> CoupledChain:
    """
    Iterate coupled_cycle from (u0_1, u0_2)

    Args:
        u0_1, u0_2: Initial states
        sim: Simulation config
        cfg: Coupling config
        n_cycles: Number of cycles
        rng: Random stream owned by this pair
        log_path: Optional JSON-lines cycle log
        seed, config: Embedded in the cycle log header

    Returns:
        CoupledChain with cycle records and boundary states
    """
    state = initial_state(u0_1, u0_2, sim, cfg)
    records = []
    u1 = np.empty((n_cycles + 1, sim.M), dtype=np.complex128)
    u2 = np.empty((n_cycles + 1, sim.M), dtype=np.complex128)
    u1[0], u2[0] = u0_1.coeffs, u0_2.coeffs
    for k in range(n_cycles):
        state, record = coupled_cycle(state, sim, cfg, rng)
        records.append(record)
        u1[k + 1], u2[k + 1] = state.u1.coeffs, state.u2.coeffs
    if log_path is not None:
        write_cycle_log(records, log_path, seed=seed, config=config)
    coupled = sum(r.l0_after is not None for r in records)
    logger.info("Coupled chain finished", cycles=n_cycles, coupled_cycles=coupled)
    return CoupledChain(records=records, u1=u1, u2=u2, final=state)


def foias_prodi_pair(u0_1: SpectralField, u0_2: SpectralField, sim: SimConfig, rng: np.random.Generator,
                     record_every: int = 1) -> PairHistory:
    """
    Pair with identical low modes and shared high-mode noise over the horizon sim.T

    Trajectory 2 is simulated; trajectory 1 takes X1 = X2 and Y1 = Phi(X2, eta, u0_1),
    which is trajectory 1 under the exact compensating control.

    Args:
        u0_1, u0_2: Initial states with equal low modes
        sim: Simulation config; N = sim.n_star
        rng: Random stream
        record_every: Keep every k-th time

    Returns:
        PairHistory

    Raises:
        ContractError: If the initial low modes differ
    """
    N = sim.n_star
    if not np.array_equal(u0_1.coeffs[:N], u0_2.coeffs[:N]):
        raise ContractError("Foias-Prodi pair needs equal low modes at time 0")
    traj = simulate(u0_2, sim, rng, record_noise=True)
    x_path = _low(traj.states, N)
    y1 = phi_reconstruct(x_path, traj.noise_record, u0_1, sim)
    u1 = x_path + y1
    keep = slice(None, None, record_every)
    return PairHistory(times=traj.times[keep], u1=u1[keep], u2=traj.states[keep])
