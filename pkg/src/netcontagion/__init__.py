"""Financial contagion through common asset exposure and interbank lending."""

from .distributions import LossModel, NormalLossModel, calibrate_alpha, t_cdf, t_quantile
from .generators import build_exposures, diversification, gen_er_network, gen_portfolios, interbank_weight
from .model import (
    ExposureSystem,
    ModelParams,
    RegionSignature,
    asset_losses,
    cascade_gfp,
    cascade_lfp,
    cost,
    failure_count,
    step,
)
from .montecarlo import SweepConfig, SweepTable, expected_cost, find_d_opt, sweep

__version__ = "0.1.0"
