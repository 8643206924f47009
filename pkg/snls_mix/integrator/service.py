"""
Strang splitting for the damped stochastic NLS

One step: half linear flow exp(-(i mu_n + alpha) dt/2), the exact pointwise
phase rotation u exp(i lambda |u|^{2 sigma} dt) on the dealiasing grid,
another half linear flow, then the additive increment b dW + h dt.
"""

from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from ..energy import EnergyParams
from ..noise import WienerIncrement, increment_batch
from ..spectral import SpectralField, get_basis, nonlinear_grid_size
from ..utils.errors import SnlsMixError
from .schemas import SimConfig, Trajectory


class ContractError(SnlsMixError):
    """Raised when inputs break a structural precondition (support, grid alignment)"""
    pass


class BlowUpError(SnlsMixError):
    """Raised when a trajectory produces non-finite coefficients"""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class StrangStepper:
    """
    Array-level step kernel for fixed (M, dt, sigma, lambda, alpha)

    Coefficient arrays may carry leading batch axes.
    """

    def __init__(self, M: int, dt: float, sigma: float, lam: int, alpha: float):
        self.M = M
        self.dt = dt
        self.sigma = sigma
        self.lam = lam
        self.half = get_basis(M).linear_factor(dt / 2.0, alpha)
        self.grid = get_basis(M, nonlinear_grid_size(M, sigma))

    def rotate(self, coeffs: np.ndarray) -> np.ndarray:
        values = self.grid.to_grid(coeffs)
        values = values * np.exp(1j * self.lam * np.abs(values) ** (2 * self.sigma) * self.dt)
        return self.grid.from_grid(values)

    def deterministic(self, coeffs: np.ndarray) -> np.ndarray:
        """Linear half step, nonlinear rotation, linear half step"""
        return self.half * self.rotate(self.half * coeffs)

    def advance(self, coeffs: np.ndarray, dw: np.ndarray, h: Optional[np.ndarray] = None) -> np.ndarray:
        out = self.deterministic(coeffs) + dw
        if h is not None:
            out = out + h * self.dt
        return out


@lru_cache(maxsize=32)
def _cached_stepper(M: int, dt: float, sigma: float, lam: int, alpha: float) -> StrangStepper:
    return StrangStepper(M, dt, sigma, lam, alpha)


def get_stepper(M: int, dt: float, params: EnergyParams) -> StrangStepper:
    """Shared stepper for (M, dt, sigma, lambda, alpha)"""
    return _cached_stepper(M, dt, params.sigma, params.lam, params.alpha)


def check_control_support(h: np.ndarray, N: int) -> None:
    """
    Raises:
        ContractError: If h has a nonzero coefficient above mode N
    """
    if np.any(h[..., N:] != 0):
        raise ContractError(f"control has support above mode N={N}")


def step(u: SpectralField, dt: float, dW: WienerIncrement, cfg: SimConfig,
         h: Optional[SpectralField] = None) -> SpectralField:
    """
    One Strang step of the (optionally controlled) equation

    Args:
        u: State at time t
        dt: Step length
        dW: Increment b dW drawn for this dt
        cfg: Simulation config (equation parameters, noise)
        h: Optional control supported on modes <= N_*

    Returns:
        State at time t + dt

    Raises:
        ContractError: If h has support above N_* or dW has a different dt
    """
    if abs(dW.dt - dt) > 1e-12 * dt:
        raise ContractError(f"increment drawn for dt={dW.dt}, stepping with dt={dt}")
    control = None
    if h is not None:
        check_control_support(h.coeffs, cfg.n_star)
        control = h.coeffs
    stepper = get_stepper(u.M, dt, cfg.params)
    return SpectralField(coeffs=stepper.advance(u.coeffs, dW.delta_w, control))


def simulate(u0: SpectralField, cfg: SimConfig, rng: Optional[np.random.Generator] = None,
             h: Optional[np.ndarray] = None, record_noise: bool = False,
             noise_path: Optional[np.ndarray] = None, record_every: int = 1,
             seed: Optional[int] = None) -> Trajectory:
    """
    Iterate `step` over ceil(T/dt) steps

    Args:
        u0: Initial state
        cfg: Simulation config
        rng: Random stream for the increments (ignored when noise_path is given)
        h: Optional (n_steps, M) control path supported on modes <= N_*
        record_noise: Keep the per-step increments on the trajectory
        noise_path: Replay these (n_steps, M) increments instead of drawing
        record_every: Keep every k-th state
        seed: Seed recorded on the trajectory

    Returns:
        Trajectory

    Raises:
        BlowUpError: On the first step producing non-finite coefficients
        ContractError: On misaligned control or noise paths
    """
    if u0.M != cfg.M:
        raise ContractError(f"initial state has {u0.M} modes, config has M={cfg.M}")
    n_steps = cfg.n_steps
    if noise_path is None:
        if rng is None:
            raise ContractError("simulate needs an rng or a noise_path")
        noise_path = increment_batch(cfg.noise.b_coeffs, cfg.dt, rng, n_steps)
    elif noise_path.shape != (n_steps, cfg.M):
        raise ContractError(f"noise path shape {noise_path.shape} does not match ({n_steps}, {cfg.M})")
    if h is not None:
        if h.shape != (n_steps, cfg.M):
            raise ContractError(f"control path shape {h.shape} does not match ({n_steps}, {cfg.M})")
        check_control_support(h, cfg.n_star)

    stepper = get_stepper(cfg.M, cfg.dt, cfg.params)
    n_records = n_steps // record_every + 1
    states = np.empty((n_records, cfg.M), dtype=np.complex128)
    coeffs = np.array(u0.coeffs)
    states[0] = coeffs
    for k in range(n_steps):
        coeffs = stepper.advance(coeffs, noise_path[k], None if h is None else h[k])
        if not np.all(np.isfinite(coeffs)):
            logger.error("Trajectory blew up", step=k + 1, sigma=cfg.params.sigma, lam=cfg.params.lam)
            raise BlowUpError(k + 1)
        if (k + 1) % record_every == 0:
            states[(k + 1) // record_every] = coeffs

    kept_steps = (n_records - 1) * record_every
    return Trajectory(
        times=np.arange(n_records) * cfg.dt * record_every,
        states=states,
        noise_record=noise_path[:kept_steps] if record_noise else None,
        dt=cfg.dt,
        stride=record_every,
        seed=seed,
    )


def phi_reconstruct(x_path: np.ndarray, eta_path: np.ndarray, u0: SpectralField, cfg: SimConfig) -> np.ndarray:
    """
    High-mode reconstruction Y = Phi(X, eta, u0)

    Y advances by the same splitting, each step evaluated at the given X:
    Y_{k+1} = Q_N[S(X_k + Y_k)] + eta_k with S the deterministic Strang map.
    The step is explicit in Y, so no fixed-point iteration is needed, and
    Y_{k+1} only reads inputs up to step k.

    Args:
        x_path: (n + 1, M) low-mode states X_0..X_n
        eta_path: (n, M) high-mode increments
        u0: Initial state; supplies Y_0 = Q_N u0
        cfg: Simulation config; N = cfg.n_star

    Returns:
        (n + 1, M) high-mode states Y_0..Y_n

    Raises:
        ContractError: If the paths are not on the same grid
    """
    x_path = np.asarray(x_path, dtype=np.complex128)
    eta_path = np.asarray(eta_path, dtype=np.complex128)
    if x_path.ndim != 2 or eta_path.ndim != 2 or x_path.shape[0] != eta_path.shape[0] + 1:
        raise ContractError(f"x_path {x_path.shape} and eta_path {eta_path.shape} are not on the same grid")
    if x_path.shape[1] != cfg.M or eta_path.shape[1] != cfg.M or u0.M != cfg.M:
        raise ContractError("paths and initial state must have M modes")
    N = cfg.n_star
    stepper = get_stepper(cfg.M, cfg.dt, cfg.params)
    y = np.zeros_like(x_path)
    y[0, N:] = u0.coeffs[N:]
    for k in range(eta_path.shape[0]):
        drift = stepper.deterministic(x_path[k] + y[k])
        y[k + 1, N:] = drift[N:] + eta_path[k, N:]
    return y


def split_low_high(traj: Trajectory, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """X = P_N u and Y = Q_N u along a trajectory"""
    if N < 0 or N > traj.M:
        raise ContractError(f"cutoff N={N} outside [0, {traj.M}]")
    low = np.zeros_like(traj.states)
    high = np.zeros_like(traj.states)
    low[:, :N] = traj.states[:, :N]
    high[:, N:] = traj.states[:, N:]
    return low, high
