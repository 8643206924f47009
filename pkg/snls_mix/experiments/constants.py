"""
Scenario presets for experiment files
"""

# Defocusing cubic equation with the noise of the acceptance runs
REFERENCE = {
    "equation": {"sigma": 1.0, "lambda": -1, "alpha": 1.0},
    "discretization": {"M": 128, "dt": 1e-3, "T_horizon": 10.0},
    "noise": {"n_star": 16, "scale": 1.0, "exponent": 4.0, "cutoff": 64},
    "constants": {"G": 0.0, "G1": 0.0, "Lambda": "calibrate", "safety": 2.0},
    "coupling": {"T": 1.0, "d0": 0.5, "R0": 10.0, "q": 1.0},
    "initial": {"modes": [1, 2, 3], "H_1": 0.0, "H_2": 20.0},
    "run": {"n_trajectories": 200, "n_cycles": 50, "record_every": 10},
}

# Undamped, unforced cubic equation for the conservation run
CONSERVATION = {
    "equation": {"sigma": 1.0, "lambda": -1, "alpha": 0.0},
    "discretization": {"M": 128, "dt": 1e-3, "T_horizon": 10.0},
    "noise": {"n_star": 1, "scale": 0.0},
    "constants": {"G": 0.0, "G1": 0.0},
    "coupling": {"T": 1.0, "R0": 10.0},
    "initial": {"modes": [1, 2, 3], "amplitude_1": 1.0, "amplitude_2": 1.0},
    "run": {"n_trajectories": 2, "record_every": 100},
}

# Focusing cubic equation; G and G1 come from calibration
FOCUSING = {
    "equation": {"sigma": 1.0, "lambda": 1, "alpha": 1.0},
    "discretization": {"M": 64, "dt": 1e-3, "T_horizon": 10.0},
    "noise": {"n_star": 8, "scale": 1.0, "exponent": 4.0, "cutoff": 32},
    "constants": {"G": "calibrate", "G1": "calibrate", "Lambda": "calibrate"},
    "coupling": {"T": 1.0, "d0": 0.5, "R0": 10.0},
    "initial": {"modes": [1, 2], "H_1": 0.0, "H_2": 5.0},
    "run": {"n_trajectories": 200, "n_cycles": 30, "record_every": 10},
}

# sigma = 0: linear damped Schrodinger equation with closed-form contraction
LINEAR = {
    "equation": {"sigma": 0.0, "lambda": -1, "alpha": 1.0},
    "discretization": {"M": 32, "dt": 1e-2, "T_horizon": 10.0},
    "noise": {"n_star": 4, "scale": 1.0, "exponent": 4.0},
    "constants": {"G": 0.0, "G1": 0.0, "Lambda": 1.0},
    "coupling": {"T": 1.0, "d0": 0.5, "R0": 5.0},
    "initial": {"modes": [1], "amplitude_1": 0.0, "amplitude_2": 2.0},
    "run": {"n_trajectories": 200, "n_cycles": 30, "record_every": 10},
}

SCENARIOS = {
    "reference": REFERENCE,
    "conservation": CONSERVATION,
    "focusing": FOCUSING,
    "linear": LINEAR,
}

SUBCOMMANDS = ("calibrate", "simulate", "lyapunov", "smallball", "foias-prodi", "couple", "mix")

# Leading stream id per experiment role; the trailing id is the trajectory index
STREAM_ROLES = {
    "calibration": 10,
    "simulate": 11,
    "lyapunov": 12,
    "foias_prodi": 13,
    "couple": 14,
    "marginal": 15,
}
