"""
Low-mode controls and pair co-simulation

A controller maps the pair state at step k to a control h_k on modes <= N_*.
Trajectory 1 driven by beta + sigma_l^{-1} h dt is the same as the controlled
equation driven by beta, so every control is realized as a shift of the
low-mode noise; co_simulate runs that shift forwards (given trajectory 2's
noise) or inverts it (given trajectory 1's noise).
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from ..energy import EnergyParams, ell_values
from ..integrator import BlowUpError, ContractError, SimConfig, StrangStepper, get_stepper
from ..noise import NoiseOperator
from ..spectral import get_basis
from .girsanov import girsanov_logdensity, sigma_l_inverse
from .schemas import ControlPath, CouplingConfig


class BoundedController:
    """
    Base controller: evaluates the norm bound ||h||_1^2 <= k0 l(u1, u2)^{(2s+1)/(3s+1)}

    With `clip` set, a control violating the bound is scaled back onto it.
    """
    # whether an unclipped control makes the low modes equal after this step
    matches_every_step = False

    def __init__(self, N: int, dt: float, params: EnergyParams, k0: float, clip: bool = True):
        self.N = N
        self.dt = dt
        self.params = params
        self.k0 = k0
        self.clip = clip
        self.exponent = (2 * params.sigma + 1) / (3 * params.sigma + 1)

    def raw(self, k: int, u1: np.ndarray, u2: np.ndarray, s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matches(self, k: int) -> bool:
        return self.matches_every_step

    def bound_ratio(self, h: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> float:
        norm_sq = float(get_basis(h.size).gradient_sq(h))
        if norm_sq == 0.0:
            return 0.0
        weight = float(ell_values(u1, u2, self.params)) ** self.exponent
        return norm_sq / (self.k0 * weight)

    def __call__(self, k: int, u1: np.ndarray, u2: np.ndarray, s1: np.ndarray, s2: np.ndarray):
        h = np.zeros_like(u1)
        h[:self.N] = self.raw(k, u1, u2, s1, s2)[:self.N]
        ratio = self.bound_ratio(h, u1, u2)
        if self.clip and ratio > 1.0:
            h = h / np.sqrt(ratio)
        return h, ratio


class FeedbackController(BoundedController):
    """h = -gain (X1 - X2); the last step of the cycle matches P S(u2) exactly"""

    def __init__(self, N: int, dt: float, params: EnergyParams, k0: float, gain: float, n_steps: int,
                 clip: bool = True):
        super().__init__(N, dt, params, k0, clip)
        self.gain = gain
        self.n_steps = n_steps

    def matches(self, k: int) -> bool:
        return k == self.n_steps - 1

    def raw(self, k, u1, u2, s1, s2):
        if self.matches(k):
            return (s2 - s1) / self.dt
        return -self.gain * (u1 - u2)


class CompensatingController(BoundedController):
    """h = (P S(u2) - P S(u1)) / dt, keeping equal low modes equal at every step"""
    matches_every_step = True

    def raw(self, k, u1, u2, s1, s2):
        return (s2 - s1) / self.dt


@dataclass
class PathDraw:
    """One co-simulated cycle"""
    beta1: np.ndarray        # (n, N) unscaled low-mode increments of trajectory 1
    u1: np.ndarray           # (n + 1, M)
    u2: np.ndarray           # (n + 1, M)
    h: np.ndarray            # (n, M)
    bound_ratios: np.ndarray  # (n,)
    log_density: float       # log d(S#nu)/d(nu) at beta1
    terminal_gap: float      # |X1 - X2| after the last step, before any assignment


def co_simulate(u1_0: np.ndarray, u2_0: np.ndarray, beta: np.ndarray, eta: np.ndarray,
                controller: BoundedController, stepper: StrangStepper, noise: NoiseOperator,
                mode: Literal["forward", "inverse"]) -> PathDraw:
    """
    Advance a pair under a shared high-mode noise eta and shifted low-mode noise

    forward: trajectory 2 is driven by beta, trajectory 1 by S(beta) = beta + sigma_l^{-1} h dt;
             low modes of trajectory 1 are assigned from trajectory 2 on steps the controller matches.
    inverse: trajectory 1 is driven by beta, trajectory 2 by S^{-1}(beta).

    Args:
        u1_0, u2_0: Initial coefficient vectors
        beta: (n, N) unscaled low-mode increments of the driving trajectory
        eta: (n, M) increments b dW, only modes > N are used
        controller: Control rule
        stepper: Strang kernel
        noise: Noise operator (b and N_*)
        mode: Direction of the shift

    Raises:
        BlowUpError: If either trajectory becomes non-finite
    """
    N = noise.n_star
    b_low = noise.b_coeffs[:N]
    inverse = sigma_l_inverse(noise)
    n, M = eta.shape[0], u1_0.size
    u1 = np.empty((n + 1, M), dtype=np.complex128)
    u2 = np.empty((n + 1, M), dtype=np.complex128)
    h_path = np.zeros((n, M), dtype=np.complex128)
    beta1 = np.empty((n, N), dtype=np.complex128)
    ratios = np.zeros(n)
    gap = float(np.linalg.norm(u1_0[:N] - u2_0[:N]))
    u1[0], u2[0] = u1_0, u2_0

    for k in range(n):
        s1 = stepper.deterministic(u1[k])
        s2 = stepper.deterministic(u2[k])
        h, ratio = controller(k, u1[k], u2[k], s1, s2)
        shift = h[:N] * inverse * stepper.dt
        if mode == "forward":
            xi = beta[k]
            beta1[k] = xi + shift
        else:
            beta1[k] = beta[k]
            xi = beta[k] - shift
        u1[k + 1] = s1
        u2[k + 1] = s2
        u1[k + 1, :N] += b_low * beta1[k]
        u2[k + 1, :N] += b_low * xi
        u1[k + 1, N:] += eta[k, N:]
        u2[k + 1, N:] += eta[k, N:]
        gap = float(np.linalg.norm(u1[k + 1, :N] - u2[k + 1, :N]))
        clipped = controller.clip and ratio > 1.0
        if mode == "forward" and not clipped and controller.matches(k):
            u1[k + 1, :N] = u2[k + 1, :N]
        if not (np.all(np.isfinite(u1[k + 1])) and np.all(np.isfinite(u2[k + 1]))):
            raise BlowUpError(k + 1)
        h_path[k] = h
        ratios[k] = ratio

    log_density = girsanov_logdensity(h_path, beta1, noise, stepper.dt)
    return PathDraw(beta1=beta1, u1=u1, u2=u2, h=h_path, bound_ratios=ratios, log_density=log_density,
                    terminal_gap=gap)


def build_control(u1_start: np.ndarray, u2_path: np.ndarray, beta2: np.ndarray, eta: np.ndarray,
                  sim: SimConfig, cfg: CouplingConfig, clip: bool = False) -> ControlPath:
    """
    Binding control driving trajectory 1 onto trajectory 2's low modes at the end of the cycle

    Trajectory 1 starts at u1_start and shares trajectory 2's low-mode noise beta2
    and high-mode noise eta; the control is linear feedback with a terminal
    correction that makes X1(T) = X2(T).

    Args:
        u1_start: Initial coefficients of trajectory 1
        u2_path: (n + 1, M) trajectory 2, used to check alignment with beta2
        beta2: (n, N) unscaled low-mode increments of trajectory 2
        eta: (n, M) shared high-mode increments
        sim: Simulation config
        cfg: Coupling config (gain, k0, N_star)
        clip: Scale controls violating the norm bound back onto it

    Returns:
        ControlPath with the per-step bound ratios

    Raises:
        ContractError: If the inputs are not aligned or N_star disagrees with the noise
    """
    if cfg.N_star != sim.n_star:
        raise ContractError(f"coupling N_star={cfg.N_star} differs from noise n_star={sim.n_star}")
    n = beta2.shape[0]
    if u2_path.shape[0] != n + 1 or eta.shape[0] != n:
        raise ContractError("u2_path, beta2 and eta are not on the same grid")
    stepper = get_stepper(sim.M, sim.dt, sim.params)
    controller = FeedbackController(cfg.N_star, sim.dt, sim.params, cfg.k0, cfg.gain, n, clip=clip)
    draw = co_simulate(np.asarray(u1_start), u2_path[0], beta2, eta, controller, stepper, sim.noise, "forward")
    return ControlPath(h=draw.h, u1=draw.u1, bound_ratios=draw.bound_ratios, terminal_gap=draw.terminal_gap)
