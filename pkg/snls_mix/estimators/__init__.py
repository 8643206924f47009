"""Monte Carlo estimators for dissipation, small-ball entry, contraction, coupling conditions and mixing"""

from .schemas import (
    Ensemble,
    BinStat,
    DriftReport,
    MomentDecayReport,
    TailReport,
    StoppingReport,
    InvariantMomentReport,
    SmallBallReport,
    ContractionReport,
    FoiasProdiReport,
    MixingCurve,
    RateFit,
    ConditionReport,
    MarginalReport,
)
from .ensemble import summarize_states, simulate_ensemble, simulate_pairs
from .lyapunov import (
    check_ito_drift,
    estimate_moment_decay,
    accumulated_energy,
    tail_probability,
    check_stopping_bound,
    invariant_moment,
)
from .smallball import dissipation_time, smallball_frequency
from .contraction import contraction_tail, fp_supermartingale, calibrate_lambda
from .mixing import default_dictionary, mixing_curve_from_ensembles, mixing_curve, gap_reduction, fit_rate
from .conditions import l0_violations, coupling_condition_stats, chain_ensemble, marginal_check

__all__ = [
    "Ensemble",
    "BinStat",
    "DriftReport",
    "MomentDecayReport",
    "TailReport",
    "StoppingReport",
    "InvariantMomentReport",
    "SmallBallReport",
    "ContractionReport",
    "FoiasProdiReport",
    "MixingCurve",
    "RateFit",
    "ConditionReport",
    "MarginalReport",
    "summarize_states",
    "simulate_ensemble",
    "simulate_pairs",
    "check_ito_drift",
    "estimate_moment_decay",
    "accumulated_energy",
    "tail_probability",
    "check_stopping_bound",
    "invariant_moment",
    "dissipation_time",
    "smallball_frequency",
    "contraction_tail",
    "fp_supermartingale",
    "calibrate_lambda",
    "default_dictionary",
    "mixing_curve_from_ensembles",
    "mixing_curve",
    "gap_reduction",
    "fit_rate",
    "l0_violations",
    "coupling_condition_stats",
    "chain_ensemble",
    "marginal_check",
]
