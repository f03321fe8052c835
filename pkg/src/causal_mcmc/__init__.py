"""Causal effect estimation from mixed observational and knock-out data with
Metropolis-Hastings sampling over node orderings."""
from .gbn import GbnParams, WeightedDag, intervention_moments, standin_dag, total_effects, validate_ordering
from .likelihood import analytic_gradient, fit_mle, log_likelihood, profile_loglik
from .mallows import MallowsParams, kendall_distance, log_density
from .mcmc import ChainConfig, ChainResult, run_chain, summarize, tune_temperature
from .metrics import evaluate, roc_pr_curves
from .pinna import pinna_requires_full_design, pinna_scores
from .simulator import (
    Dataset,
    Experiment,
    InterventionDesign,
    builtin_designs,
    design_by_name,
    read_dataset,
    sample_parameters,
    simulate,
)

__version__ = "0.1.0"
