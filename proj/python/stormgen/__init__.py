"""Spatio-temporal extreme rainfall generator."""

from ._core import (
    AdvectionTransform,
    Catalog,
    EgpdFit,
    EgpdParams,
    FitResult,
    MarginalModel,
    VariogramParams,
    chi_r,
    composite_loglik,
    egpd_cdf,
    egpd_quantile,
    fit_egpd,
    fit_variogram,
    generate_episode,
    inverse_chi,
    run_recovery,
    select_episodes,
    simulate_catalog,
    simulate_rpareto,
    standardize_g,
    transform_advection,
    variogram,
    estimate_velocity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
