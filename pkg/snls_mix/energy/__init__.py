"""Energy, Lyapunov and Foias–Prodi functionals with their calibrated constants"""

from .schemas import EnergyParams, LyapunovAccumulator, PairHistory
from .service import (
    StateError,
    CalibrationError,
    power,
    h_star_values,
    energy_values,
    h_star,
    energy,
    energy_lower_bound,
    powers,
    lyapunov_start,
    lyapunov_advance,
    lyapunov_step,
    f_prime_pointwise,
    f_prime,
    j_values,
    j_form,
    ell_values,
    ell,
    jfp_weight,
    jfp_accumulate,
    gradient_sq,
    mass_power,
)
from .calibration import (
    random_corpus,
    calibrate_G,
    verify_G,
    random_triples,
    calibrate_G1,
    verify_G1,
    gagliardo_nirenberg_ratios,
    gagliardo_nirenberg_constant,
)

__all__ = [
    "EnergyParams",
    "LyapunovAccumulator",
    "PairHistory",
    "StateError",
    "CalibrationError",
    "power",
    "h_star_values",
    "energy_values",
    "h_star",
    "energy",
    "energy_lower_bound",
    "powers",
    "lyapunov_start",
    "lyapunov_advance",
    "lyapunov_step",
    "f_prime_pointwise",
    "f_prime",
    "j_values",
    "j_form",
    "ell_values",
    "ell",
    "jfp_weight",
    "jfp_accumulate",
    "gradient_sq",
    "mass_power",
    "random_corpus",
    "calibrate_G",
    "verify_G",
    "random_triples",
    "calibrate_G1",
    "verify_G1",
    "gagliardo_nirenberg_ratios",
    "gagliardo_nirenberg_constant",
]
