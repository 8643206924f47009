"""
Ensemble generation and per-trajectory summaries

Trajectories run on a thread pool; trajectory i always draws from stream
(seed, role, i), so results do not depend on the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..config import DEFAULT_THREADS
from ..energy import EnergyParams, energy_values
from ..integrator import BlowUpError, SimConfig, simulate
from ..spectral import SpectralField, get_basis
from ..utils.errors import ParameterError
from ..utils.rng import make_stream
from .schemas import Ensemble

DEFAULT_LOW_MODES = 4


def summarize_states(states: np.ndarray, params: EnergyParams, n_low: int = DEFAULT_LOW_MODES):
    """
    H, squared mass and leading coefficients of a (..., M) state array

    Returns:
        (H, mass, low) with low of shape (..., n_low)
    """
    M = states.shape[-1]
    return energy_values(states, params), get_basis(M).mass_sq(states), np.array(states[..., :min(n_low, M)])


def _run_one(u0: SpectralField, sim: SimConfig, seed: int, role: int, index: int, record_every: int,
             n_low: int) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    rng = make_stream(seed, role, index)
    try:
        traj = simulate(u0, sim, rng, record_every=record_every, seed=seed)
    except BlowUpError as exc:
        logger.warning("Trajectory aborted", index=index, step=exc.step)
        return None
    return summarize_states(traj.states, sim.params, n_low)


def simulate_ensemble(u0: Union[SpectralField, Sequence[SpectralField]], sim: SimConfig, n: int, seed: int,
                      role: int = 0, threads: int = DEFAULT_THREADS, record_every: int = 1,
                      n_low: int = DEFAULT_LOW_MODES) -> Ensemble:
    """
    Simulate n independent trajectories and keep their summaries

    Args:
        u0: Common initial state, or one initial state per trajectory
        sim: Simulation config
        n: Number of trajectories
        seed: Experiment seed
        role: Stream role; ensembles sharing seed and role share their noise
        threads: Worker threads
        record_every: Keep every k-th step
        n_low: Leading coefficients kept per state

    Returns:
        Ensemble of the trajectories that stayed finite
    """
    starts: List[SpectralField] = [u0] * n if isinstance(u0, SpectralField) else list(u0)
    if len(starts) != n:
        raise ParameterError(f"expected {n} initial states, got {len(starts)}")

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda i: _run_one(starts[i], sim, seed, role, i, record_every, n_low), range(n)))

    kept = [i for i, res in enumerate(results) if res is not None]
    aborted = n - len(kept)
    if aborted:
        logger.warning("Ensemble lost trajectories to blow-up", aborted=aborted, n=n)
    if not kept:
        raise BlowUpError(-1, "every trajectory of the ensemble blew up")

    n_records = sim.n_steps // record_every + 1
    ensemble = Ensemble(
        times=np.arange(n_records) * sim.dt * record_every,
        stream_ids=kept,
        seed=seed,
        H=np.stack([results[i][0] for i in kept]),
        mass=np.stack([results[i][1] for i in kept]),
        low=np.stack([results[i][2] for i in kept]),
        aborted=aborted,
    )
    logger.info("Simulated ensemble", n=ensemble.n, aborted=aborted, steps=sim.n_steps, threads=threads)
    return ensemble


def simulate_pairs(u0_pairs: Sequence[Tuple[SpectralField, SpectralField]], sim: SimConfig, n_per_pair: int,
                   seed: int, threads: int = DEFAULT_THREADS, record_every: int = 1) -> Tuple[Ensemble, Ensemble]:
    """
    Independent trajectories from each pair of initial states

    Returns:
        Two ensembles aligned row by row (row j of both belongs to the same pair)
    """
    firsts = [pair[0] for pair in u0_pairs for _ in range(n_per_pair)]
    seconds = [pair[1] for pair in u0_pairs for _ in range(n_per_pair)]
    n = len(firsts)
    one = simulate_ensemble(firsts, sim, n, seed, role=1, threads=threads, record_every=record_every)
    two = simulate_ensemble(seconds, sim, n, seed, role=2, threads=threads, record_every=record_every)
    common = sorted(set(one.stream_ids) & set(two.stream_ids))
    return _restrict(one, common), _restrict(two, common)


def _restrict(ensemble: Ensemble, ids: List[int]) -> Ensemble:
    if ids == ensemble.stream_ids:
        return ensemble
    rows = [ensemble.stream_ids.index(i) for i in ids]
    return ensemble.model_copy(update={
        "stream_ids": ids, "H": ensemble.H[rows], "mass": ensemble.mass[rows], "low": ensemble.low[rows],
        "aborted": ensemble.aborted + len(ensemble.stream_ids) - len(ids),
    })
