"""Correctness tests for MCMC samplers, demonstrated on a Gibbs sampler
for an isotropic Bayesian mixture of Gaussians."""

from .consistency import check_all, check_block, perturb_block
from .distributions import (
    Dirichlet,
    DomainError,
    Gaussian,
    InverseGamma,
    Multinomial,
    ParameterError,
    moment_check,
)
from .geweke import GewekeConfig, calibrate, geweke_run, ks_distance, pp_points
from .model import BLOCKS, STATISTICS, MixtureModel, ModelSpec, State, as_dataset
from .mutants import REGISTRY, apply_mutant, detected_by, kill_matrix
from .rng import RngStream

__version__ = "0.1.0"
