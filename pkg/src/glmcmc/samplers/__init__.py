"""Gibbs and HMC samplers with theory-derived schedules."""

from .conditional import CurvatureHint, sample_conditional_1d
from .gibbs import ChainState, GibbsEnsemble, feasible_init, gibbs_iterate, run_gibbs
from .hmc import GradCache, hmc_coupled_iterate, hmc_inner_step, hmc_iterate, hmc_trajectory, run_hmc
from .theory import (
    GibbsParams,
    HmcParams,
    TheoryConstants,
    gibbs_params_from_theory,
    hmc_params_from_theory,
    local_condition_numbers,
    poisson_gibbs_params,
    theory_constants,
    with_inner_steps,
)

__all__ = [
    "ChainState", "CurvatureHint", "GibbsEnsemble", "GibbsParams", "GradCache", "HmcParams",
    "TheoryConstants", "feasible_init", "gibbs_iterate", "gibbs_params_from_theory",
    "hmc_coupled_iterate", "hmc_inner_step", "hmc_iterate", "hmc_params_from_theory",
    "hmc_trajectory", "local_condition_numbers", "poisson_gibbs_params", "run_gibbs", "run_hmc",
    "sample_conditional_1d", "theory_constants", "with_inner_steps",
]
