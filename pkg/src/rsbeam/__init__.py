"""Weighted sum-rate beamforming for a rate-splitting downlink.

The transmitter superposes one common stream on K private streams and
maximizes the weighted sum rate under a transmit power budget, entirely with
closed-form updates: a concave surrogate in auxiliary variables, a
closed-form beamformer structure in the duals, and a fixed-point iteration on
the duals themselves. No convex-optimization toolbox is involved anywhere,
including the test oracles.
"""

from .beamstruct import (
    DualState,
    KktResiduals,
    StructureCoefficients,
    beamformers_from_duals,
    build_coefficients,
    hfpi_solve,
    kkt_residuals,
)
from .bench import TrialRecord, run_montecarlo, trial_seed
from .estimator import RsmaBeamformer, SdmaBeamformer
from .exceptions import (
    ChannelFileError,
    ConfigError,
    InfeasibleBeamformerError,
    NumericalError,
)
from .fp_core import (
    AuxiliaryState,
    f_value,
    fp_objective,
    g_value,
    make_aux,
    update_alpha,
    update_beta,
)
from .model import (
    RateReport,
    SystemConfig,
    evaluate,
    generate_channel,
    load_channel_file,
    rate,
    save_channel_file,
    sinr,
)
from .oracle import global_search, lp_allocate, reference_inner_solve
from .solver import (
    Solution,
    allocate_common_rate,
    initialize_beamformers,
    solve,
    solve_sdma,
)

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryState",
    "ChannelFileError",
    "ConfigError",
    "DualState",
    "InfeasibleBeamformerError",
    "KktResiduals",
    "NumericalError",
    "RateReport",
    "RsmaBeamformer",
    "SdmaBeamformer",
    "Solution",
    "StructureCoefficients",
    "SystemConfig",
    "TrialRecord",
    "allocate_common_rate",
    "beamformers_from_duals",
    "build_coefficients",
    "evaluate",
    "f_value",
    "fp_objective",
    "g_value",
    "generate_channel",
    "global_search",
    "hfpi_solve",
    "initialize_beamformers",
    "kkt_residuals",
    "load_channel_file",
    "lp_allocate",
    "make_aux",
    "rate",
    "reference_inner_solve",
    "run_montecarlo",
    "save_channel_file",
    "sinr",
    "solve",
    "solve_sdma",
    "trial_seed",
    "update_alpha",
    "update_beta",
    "__version__",
]
