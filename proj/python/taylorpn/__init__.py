"""Probabilistic Taylor expansions: GP regression on derivative data under
power-series kernels, with a Taylor EKF and a probabilistic Euler method
built on top. Thin re-export of the compiled core."""

from ._taylorpn import (  # noqa: F401
    DerivativeData,
    EulerState,
    KernelSpec,
    MultiIndex,
    PriorMean,
    SolveMode,
    TaylorPosterior,
    __version__,
    condition,
    condition_generic,
    count_upto,
    enumerate_upto,
    factorial_multi,
    kernel_eval,
    kernel_mixed_derivative,
    lambda_ml_n1,
    lambda_ml_n2_aniso,
    lambda_ml_n2_uniform,
    monomial,
    parse_kernel_config,
    run_experiment,
    series_tail,
    sigma_ml,
    sigma_ml_noisy_n1,
    solve_cubic_real,
    solve_ode,
    variance_bound_constant,
)
