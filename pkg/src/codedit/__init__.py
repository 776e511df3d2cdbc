"""Blind editing of corrupted samples with a diffusion prior.

Inputs are encoded with the deterministic DDIM ODE (optionally clipped to a
high-confidence interval), corrected by annealed Langevin dynamics in latent
space and decoded.  Exact Gaussian-mixture scores make every step checkable.
"""

from .cbc import CbcConfig, cbc_interval, clip_to_interval, encode_with_cbc, normal_coverage
from .corruptions import KINDS, CorruptionSpec, corrupt, gaussian_blur_kernel
from .errors import ConfigurationError, DomainError, TrainingError
from .langevin import LangevinConfig, anneal_schedule, langevin_run, langevin_step
from .metrics import TradeoffRecord, best_of_k, l2, loglik_realism, psnr, ssim
from .ode import LatentState, TimestepGrid, ddim_step, decode, encode, make_grid
from .pipelines import EditConfig, SdeditConfig, code_full, code_simple, ode_edit, sdedit
from .schedule import Schedule, forward_marginal_sample, make_linear_schedule
from .score import (
    GmmPrior,
    GmmScoreModel,
    ScoreModel,
    gmm_log_density,
    gmm_score,
    gmm_score_at_time,
    named_template_prior,
    toy_gmm_2d,
)

__all__ = [
    "CbcConfig", "cbc_interval", "clip_to_interval", "encode_with_cbc", "normal_coverage",
    "KINDS", "CorruptionSpec", "corrupt", "gaussian_blur_kernel",
    "ConfigurationError", "DomainError", "TrainingError",
    "LangevinConfig", "anneal_schedule", "langevin_run", "langevin_step",
    "TradeoffRecord", "best_of_k", "l2", "loglik_realism", "psnr", "ssim",
    "LatentState", "TimestepGrid", "ddim_step", "decode", "encode", "make_grid",
    "EditConfig", "SdeditConfig", "code_full", "code_simple", "ode_edit", "sdedit",
    "Schedule", "forward_marginal_sample", "make_linear_schedule",
    "GmmPrior", "GmmScoreModel", "ScoreModel", "gmm_log_density", "gmm_score",
    "gmm_score_at_time", "named_template_prior", "toy_gmm_2d",
]
