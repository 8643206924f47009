"""
Subcommand handlers: each resolves its inputs from the experiment, runs the
estimators and writes CSV curves plus a JSON report embedding the resolved
config and seed. A handler returns its verdicts; None marks an inconclusive one.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..config import OUTPUT_DIR
from ..coupling import foias_prodi_pair, run_coupled_chain
from ..energy import (
    CalibrationError,
    EnergyParams,
    calibrate_G,
    calibrate_G1,
    energy,
    gagliardo_nirenberg_constant,
    h_star_values,
    power,
)
from ..estimators import (
    chain_ensemble,
    check_ito_drift,
    check_stopping_bound,
    contraction_tail,
    coupling_condition_stats,
    dissipation_time,
    estimate_moment_decay,
    fit_rate,
    fp_supermartingale,
    calibrate_lambda,
    gap_reduction,
    invariant_moment,
    marginal_check,
    mixing_curve,
    simulate_ensemble,
    simulate_pairs,
    smallball_frequency,
    tail_probability,
)
from ..integrator import simulate, write_snapshot
from ..spectral import SpectralField, get_basis
from ..utils.helpers import artifact_header, config_hash, format_timestamp, make_json_serializable
from ..utils.rng import make_stream
from .constants import STREAM_ROLES
from .loader import build_coupling, build_params, build_sim, initial_states, resolved_dump
from .schemas import ConfigError, ExperimentConfig

Verdicts = Dict[str, Optional[bool]]


@dataclass
class RunContext:
    """Resolved experiment with its seed, worker count and output directory"""
    cfg: ExperimentConfig
    seed: int
    threads: int
    out: Path
    key: str

    @property
    def dump(self) -> Dict[str, Any]:
        return resolved_dump(self.cfg)

    @property
    def constants_path(self) -> Path:
        return self.out / f"constants-{self.key}.json"

    def stream(self, role: str, *ids: int) -> np.random.Generator:
        return make_stream(self.seed, STREAM_ROLES[role], *ids)


def make_context(cfg: ExperimentConfig, seed: Optional[int] = None, threads: Optional[int] = None,
                 out: Optional[Path] = None) -> RunContext:
    """Apply command-line overrides to the run block and fix the constants key"""
    run = cfg.run.model_copy(update={
        "seed": cfg.run.seed if seed is None else seed,
        "threads": cfg.run.threads if threads is None else threads,
        "out": Path(out or cfg.run.out or OUTPUT_DIR),
    })
    cfg = cfg.model_copy(update={"run": run})
    # the constants key ignores where artifacts go and how many workers produce them
    stable = resolved_dump(cfg)
    stable["run"] = {k: v for k, v in stable["run"].items() if k not in ("out", "threads")}
    run.out.mkdir(parents=True, exist_ok=True)
    return RunContext(cfg=cfg, seed=run.seed, threads=run.threads, out=run.out, key=config_hash(stable))


def write_report(ctx: RunContext, name: str, report: Dict[str, Any], verdicts: Verdicts) -> Path:
    path = ctx.out / f"{name}-{ctx.key}.json"
    payload = {
        "subcommand": name,
        "created_at": format_timestamp(),
        "seed": ctx.seed,
        "config": ctx.dump,
        "verdicts": verdicts,
        "report": report,
    }
    path.write_text(json.dumps(make_json_serializable(payload), indent=2))
    return path


def write_curve(ctx: RunContext, name: str, frame: pd.DataFrame) -> Path:
    """CSV with a leading comment line holding the seed and resolved config"""
    path = ctx.out / f"{name}-{ctx.key}.csv"
    with open(path, "w", newline="") as fh:
        fh.write(artifact_header(ctx.seed, ctx.dump) + "\n")
        frame.to_csv(fh, index=False)
    return path


def _curve(times, estimate, stderr, n) -> pd.DataFrame:
    return pd.DataFrame({"time": times, "estimate": estimate, "stderr": stderr, "n": n})


def _load_constants(ctx: RunContext) -> Dict[str, Any]:
    if ctx.constants_path.exists():
        return json.loads(ctx.constants_path.read_text())
    return {}


def resolve_params(ctx: RunContext, calibrating: bool = False) -> EnergyParams:
    """
    Equation parameters with every constant resolved

    Reads the constants file of this experiment when present; otherwise G and
    G1 are calibrated in place and a Lambda marked for calibration falls back to 1.
    """
    cfg = ctx.cfg
    stored = _load_constants(ctx)
    G, G1, Lambda = stored.get("G"), stored.get("G1"), stored.get("Lambda")
    if cfg.equation.lam == 1:
        rng = ctx.stream("calibration", 0)
        if G is None and cfg.constants.G == "calibrate":
            G = calibrate_G(cfg.equation.sigma, cfg.constants.corpus_size, cfg.constants.safety, rng)
        if G1 is None and cfg.constants.G1 == "calibrate":
            G1 = calibrate_G1(cfg.equation.sigma, cfg.constants.corpus_size, cfg.constants.safety, rng,
                              G=G if cfg.constants.G == "calibrate" else cfg.constants.G)
    if Lambda is None and cfg.constants.Lambda == "calibrate" and not calibrating:
        logger.warning("Lambda is marked for calibration but no constants file exists; using 1",
                       path=str(ctx.constants_path))
    return build_params(cfg, G, G1, Lambda)


def _pool_map(ctx: RunContext, fn: Callable[[int], Any], n: int) -> List[Any]:
    with ThreadPoolExecutor(max_workers=max(1, ctx.threads)) as pool:
        return list(pool.map(fn, range(n)))


def _fp_start(ctx: RunContext, params: EnergyParams) -> Tuple[SpectralField, SpectralField]:
    """Second initial state and a copy displaced on mode N_* + 1"""
    N = ctx.cfg.noise.n_star
    if N >= ctx.cfg.discretization.M:
        raise ConfigError("noise.n_star", "the Foias-Prodi pair needs a mode above N_*")
    _, base = initial_states(ctx.cfg, params)
    return base, base + SpectralField.mode(N + 1, base.M, ctx.cfg.initial.fp_perturbation)


def _fp_histories(ctx: RunContext, params: EnergyParams):
    sim = build_sim(ctx.cfg, params)
    u1, u2 = _fp_start(ctx, params)
    return _pool_map(ctx, lambda i: foias_prodi_pair(u1, u2, sim, ctx.stream("foias_prodi", i),
                                                     ctx.cfg.run.record_every), ctx.cfg.run.n_trajectories)


def _plateaus(ctx: RunContext, params: EnergyParams) -> Dict[str, float]:
    _, u0 = initial_states(ctx.cfg, params)
    ensemble = simulate_ensemble(u0, build_sim(ctx.cfg, params), ctx.cfg.run.n_trajectories, ctx.seed,
                                 role=STREAM_ROLES["lyapunov"], threads=ctx.threads,
                                 record_every=ctx.cfg.run.record_every)
    return {str(k): estimate_moment_decay(ensemble, k, params).C_prime_hat for k in ctx.cfg.constants.powers}


def run_calibrate(ctx: RunContext) -> Verdicts:
    """G, G1, Lambda, the plateaus C'_k and the interpolation constant, written to the constants file"""
    cfg = ctx.cfg
    if ctx.constants_path.exists():
        ctx.constants_path.unlink()
    params = resolve_params(ctx, calibrating=True)
    verdicts: Verdicts = {}
    if cfg.constants.Lambda == "calibrate":
        try:
            Lambda = calibrate_lambda(_fp_histories(ctx, params), cfg.noise.n_star, params, cfg.constants.safety)
            params = params.model_copy(update={"Lambda": Lambda})
            verdicts["Lambda"] = True
        except CalibrationError as exc:
            logger.error("Lambda calibration failed", error=str(exc))
            verdicts["Lambda"] = False
    constants = {
        "seed": ctx.seed,
        "config": ctx.dump,
        "G": params.G,
        "G1": params.G1,
        "Lambda": params.Lambda,
        "C_prime": _plateaus(ctx, params),
        "gagliardo_nirenberg": gagliardo_nirenberg_constant(cfg.equation.sigma, cfg.constants.corpus_size,
                                                            ctx.stream("calibration", 1)),
    }
    ctx.constants_path.write_text(json.dumps(make_json_serializable(constants), indent=2, sort_keys=True))
    logger.info("Wrote constants", path=str(ctx.constants_path))
    write_report(ctx, "calibrate", constants, verdicts)
    return verdicts


def run_simulate(ctx: RunContext) -> Verdicts:
    """One trajectory from the first initial state, its snapshot and drift summary"""
    params = resolve_params(ctx)
    sim = build_sim(ctx.cfg, params)
    u0, _ = initial_states(ctx.cfg, params)
    traj = simulate(u0, sim, ctx.stream("simulate", 0), record_every=ctx.cfg.run.record_every, seed=ctx.seed)
    snapshot = write_snapshot(ctx.out / f"trajectory-{ctx.key}.snap", traj, sim, ctx.seed)

    basis = get_basis(sim.M)
    norm = np.sqrt(basis.mass_sq(traj.states))
    hamiltonian = h_star_values(traj.states, params)
    summary = {
        "snapshot": str(snapshot),
        "mass_drift": float(np.max(np.abs(norm - norm[0]))),
        "h_star_drift": float(np.max(np.abs(hamiltonian - hamiltonian[0]))),
        "final_energy": float(energy(traj.final, params)),
    }
    write_curve(ctx, "simulate", _curve(traj.times, hamiltonian, 0.0, 1))
    verdicts: Verdicts = {}
    if params.alpha == 0 and not np.any(sim.noise.b_coeffs):
        verdicts["conservation"] = summary["mass_drift"] < 1e-8 and summary["h_star_drift"] < 1e-4
    write_report(ctx, "simulate", summary, verdicts)
    logger.info("Simulated trajectory", **summary)
    return verdicts


def run_lyapunov(ctx: RunContext) -> Verdicts:
    """Ito drift, moment decay, tails, stopping bound and invariant moment from the second initial state"""
    cfg = ctx.cfg
    params = resolve_params(ctx)
    _, u0 = initial_states(cfg, params)
    ensemble = simulate_ensemble(u0, build_sim(cfg, params), cfg.run.n_trajectories, ctx.seed,
                                 role=STREAM_ROLES["lyapunov"], threads=ctx.threads, record_every=cfg.run.record_every)
    verdicts: Verdicts = {}
    report: Dict[str, Any] = {}
    for k in cfg.constants.powers:
        drift = check_ito_drift(ensemble, k, params)
        decay = estimate_moment_decay(ensemble, k, params)
        tail = tail_probability(ensemble, k, params, cfg.run.tail_rhos, C_prime=decay.C_prime_hat)
        level = 2.0 * max(float(power(ensemble.H[:, 0], k).mean()), decay.C_prime_hat, 1.0) ** (1.0 / k)
        stopping = check_stopping_bound(ensemble, k, decay.C_prime_hat, level)
        report[str(k)] = {"drift": drift.model_dump(), "decay": decay.model_dump(), "tail": tail.model_dump(),
                          "stopping": stopping.model_dump()}
        verdicts[f"drift_k{k:g}"] = drift.passed
        verdicts[f"decay_k{k:g}"] = decay.passed
        verdicts[f"tail_k{k:g}"] = None if tail.inconclusive else tail.passed
        verdicts[f"stopping_k{k:g}"] = stopping.passed
        write_curve(ctx, f"lyapunov-k{k:g}", _curve(decay.times, decay.mean, decay.stderr, ensemble.n))
    if params.sigma < 2:
        mass = check_ito_drift(ensemble, 1.0, params, functional="mass_power")
        report["mass_power"] = mass.model_dump()
        verdicts["drift_mass_power"] = mass.passed
    report["invariant_moment"] = invariant_moment(ensemble, burn_in=float(ensemble.times[-1]) / 2).model_dump()
    report["aborted_fraction"] = ensemble.aborted_fraction
    write_report(ctx, "lyapunov", report, verdicts)
    return verdicts


def run_smallball(ctx: RunContext) -> Verdicts:
    """Dissipation time and small-ball entry for independent pairs from the two initial states"""
    cfg = ctx.cfg
    params = resolve_params(ctx)
    u1, u2 = initial_states(cfg, params)
    C_prime_1 = _load_constants(ctx).get("C_prime", {}).get("1.0")
    if C_prime_1 is None:
        C_prime_1 = _plateaus(ctx, params)["1.0"] if 1.0 in cfg.constants.powers else None
    if C_prime_1 is None:
        raise ConfigError("constants.powers", "the small-ball check needs k = 1")
    R0 = max(cfg.coupling.R0, energy(u1, params) + energy(u2, params))
    theta1 = dissipation_time(R0, C_prime_1, params.alpha)
    horizon = max(cfg.discretization.T_horizon, 2 * theta1 + cfg.discretization.dt)
    first, second = simulate_pairs([(u1, u2)], build_sim(cfg, params, T=horizon), cfg.run.n_trajectories, ctx.seed,
                                   threads=ctx.threads, record_every=cfg.run.record_every)
    result = smallball_frequency(first, second, cfg.run.R1 or cfg.coupling.d0, C_prime_1, R0, params.alpha)
    write_curve(ctx, "smallball", _curve(result.times, result.frequency, result.stderr, first.n))
    verdicts: Verdicts = {"smallball": result.passed}
    write_report(ctx, "smallball", result.model_dump(), verdicts)
    return verdicts


def run_foias_prodi(ctx: RunContext) -> Verdicts:
    """Contraction tail and the J_FP supermartingale check in the equal-low-modes regime"""
    params = resolve_params(ctx)
    histories = _fp_histories(ctx, params)
    tail = contraction_tail(histories, params)
    fp = fp_supermartingale(histories, ctx.cfg.noise.n_star, params)
    n = len(histories)
    write_curve(ctx, "foias-prodi-median", _curve(tail.times, tail.median, np.nan, n))
    write_curve(ctx, "foias-prodi-jfp", _curve(fp.times, fp.mean, fp.stderr, n))
    verdicts: Verdicts = {"contraction": tail.passed, "supermartingale": fp.passed}
    write_report(ctx, "foias-prodi", {"contraction": tail.model_dump(), "supermartingale": fp.model_dump()}, verdicts)
    return verdicts


def run_couple(ctx: RunContext) -> Verdicts:
    """Coupled chains with cycle logs, the coupling-condition statistics and the marginal check"""
    cfg = ctx.cfg
    params = resolve_params(ctx)
    coupling = build_coupling(cfg)
    sim = build_sim(cfg, params, T=coupling.T)
    u1, u2 = initial_states(cfg, params)
    log_dir = ctx.out / f"cycles-{ctx.key}"
    log_dir.mkdir(parents=True, exist_ok=True)
    n_cycles = cfg.run.n_cycles
    chains = _pool_map(ctx, lambda i: run_coupled_chain(u1, u2, sim, coupling, n_cycles, ctx.stream("couple", i),
                                                        log_path=log_dir / f"chain-{i:04d}.jsonl",
                                                        seed=ctx.seed, config=ctx.dump),
                       cfg.run.n_trajectories)
    stats = coupling_condition_stats([chain.records for chain in chains], coupling)

    horizon = build_sim(cfg, params, T=n_cycles * coupling.T)
    per_cycle = int(round(coupling.T / sim.dt))
    marginals = {}
    for member, start in ((1, u1), (2, u2)):
        plain = simulate_ensemble(start, horizon, cfg.run.n_trajectories, ctx.seed,
                                  role=STREAM_ROLES["marginal"] + member, threads=ctx.threads, record_every=per_cycle)
        coupled = chain_ensemble(chains, member, params, coupling.T, ctx.seed)
        marginals[str(member)] = marginal_check(coupled, plain)

    verdicts: Verdicts = {
        "binding": stats.binding_passed,
        "decoupling_monotone": stats.decoupling_monotone,
        "l0_invariants": stats.l0_violations == 0,
        "marginal_1": marginals["1"].passed,
        "marginal_2": marginals["2"].passed,
    }
    coupled_fraction = np.mean([[r.l0_after is not None for r in chain.records] for chain in chains], axis=0)
    write_curve(ctx, "couple", _curve((np.arange(n_cycles) + 1) * coupling.T, coupled_fraction,
                                      np.sqrt(coupled_fraction * (1 - coupled_fraction) / len(chains)), len(chains)))
    write_report(ctx, "couple", {"conditions": stats.model_dump(), "cycle_logs": str(log_dir),
                                 "marginals": {k: v.model_dump() for k, v in marginals.items()}}, verdicts)
    return verdicts


def run_mix(ctx: RunContext) -> Verdicts:
    """Mixing curve of the two initial states over mix_cycles cycles and its fitted exponent"""
    cfg = ctx.cfg
    params = resolve_params(ctx)
    u1, u2 = initial_states(cfg, params)
    horizon = cfg.run.mix_cycles * cfg.coupling.T
    curve = mixing_curve(u1, u2, build_sim(cfg, params, T=horizon), cfg.run.n_trajectories, ctx.seed,
                         threads=ctx.threads, record_every=cfg.run.record_every)
    fit = fit_rate(curve)
    write_curve(ctx, "mix", _curve(curve.times, curve.aggregate, curve.aggregate_stderr, curve.n))
    per_functional = pd.concat([
        _curve(curve.times, curve.gaps[:, j], curve.stderr[:, j], curve.n).assign(functional=name)
        for j, name in enumerate(curve.names)
    ], ignore_index=True)
    write_curve(ctx, "mix-functionals", per_functional)

    flat = bool(curve.aggregate[0] == 0.0 and np.all(curve.aggregate <= 3 * curve.aggregate_stderr))
    ratio, reduced = gap_reduction(curve, horizon, cfg.run.mix_factor)
    verdicts: Verdicts = {
        "reduction": True if flat else reduced,
        "rate": None if flat or fit.inconclusive else fit.positive,
    }
    report = {"flat": flat, "reduction_ratio": ratio, "fit": fit.model_dump(), "names": curve.names}
    write_report(ctx, "mix", report, verdicts)
    return verdicts


HANDLERS: Dict[str, Callable[[RunContext], Verdicts]] = {
    "calibrate": run_calibrate,
    "simulate": run_simulate,
    "lyapunov": run_lyapunov,
    "smallball": run_smallball,
    "foias-prodi": run_foias_prodi,
    "couple": run_couple,
    "mix": run_mix,
}


def run(subcommand: str, ctx: RunContext) -> int:
    """
    Run one subcommand

    Returns:
        0 when every verdict passed or is inconclusive, 1 otherwise
    """
    verdicts = HANDLERS[subcommand](ctx)
    failed = sorted(name for name, verdict in verdicts.items() if verdict is False)
    if failed:
        logger.error("Verdicts failed", subcommand=subcommand, failed=failed,
                     report=str(ctx.out / f"{subcommand}-{ctx.key}.json"))
        return 1
    logger.info("All verdicts passed or inconclusive", subcommand=subcommand, verdicts=verdicts)
    return 0
