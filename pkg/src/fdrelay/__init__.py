"""Multipair full-duplex massive-MIMO relaying toolkit.

Channel generation and MMSE estimation, ZF and MRC/MRT relay processing,
closed-form and Monte Carlo achievable rates, duplex-mode comparison, a
small geometric-program solver, and energy-efficient power allocation.
"""
from .channel import (
    ChannelSet,
    PilotBook,
    direct_channel_batch,
    estimate_via_pilots,
    generate_pilots,
    sample_estimate_direct,
    sample_true_channels,
)
from .gp import GeometricProgram, GpResult, Posynomial, brute_force_gp, dump_problem, solve_gp
from .linproc import (
    ProcessingPair,
    SingularGramError,
    alpha_mrt,
    alpha_zf,
    mr_pair,
    zf_pair,
)
from .model import (
    DropGeometry,
    LargeScaleProfile,
    SystemConfig,
    draw_urban_profile,
    estimation_variance,
    make_profile,
    snapshot_profile,
)
from .montecarlo import (
    GenieResult,
    HopTerms,
    McRateResult,
    convergence_probe,
    genie_rates,
    li_approx_oracle,
    mc_rate,
    wishart_inverse_moment,
)
from .powalloc import (
    PowerAllocation,
    SinrCoefficients,
    energy_efficiency,
    max_feasible_se,
    optimize_powers,
    sinr_coefficients,
)
from .rates import (
    RateReport,
    asymptotic_se,
    coefficient_arrays,
    hybrid_select,
    rate_mr,
    rate_zf,
    required_power,
    sum_se,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "PilotBook", "direct_channel_batch", "estimate_via_pilots",
    "generate_pilots", "sample_estimate_direct", "sample_true_channels",
    "GeometricProgram", "GpResult", "Posynomial", "brute_force_gp",
    "dump_problem", "solve_gp",
    "ProcessingPair", "SingularGramError", "alpha_mrt", "alpha_zf",
    "mr_pair", "zf_pair",
    "DropGeometry", "LargeScaleProfile", "SystemConfig", "draw_urban_profile",
    "estimation_variance", "make_profile", "snapshot_profile",
    "GenieResult", "HopTerms", "McRateResult", "convergence_probe",
    "genie_rates", "li_approx_oracle", "mc_rate", "wishart_inverse_moment",
    "PowerAllocation", "SinrCoefficients", "energy_efficiency",
    "max_feasible_se", "optimize_powers", "sinr_coefficients",
    "RateReport", "asymptotic_se", "coefficient_arrays", "hybrid_select",
    "rate_mr", "rate_zf", "required_power", "sum_se",
    "__version__",
]
