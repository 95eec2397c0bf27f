"""Shift-coupled simulation and almost-periodicity diagnostics for
dissipative semilinear SDEs on truncated Hilbert spaces.

Subpackage map:

* ``model``      -- diagonal generator + drift/diffusion catalog, exact
                    solvability constants;
* ``noise``      -- two-sided Brownian increment ensembles, shift algebra;
* ``solver``     -- exponential-Euler mild integration, convolution map,
                    Picard fixed point, shift-coupled translates;
* ``metrics``    -- truncated probability/transport metrics;
* ``analysis``   -- almost-period scans, double-sequence test,
                    distributional detectors, tightness diagnostics;
* ``controls``   -- known-answer positive/negative controls (stationary
                    Ornstein-Uhlenbeck, spike-train counterexample);
* ``budget``     -- explicit error budgets behind every verdict;
* ``cli``        -- config-driven batch commands.

The hot integration kernels live in a compiled extension with a numpy
fallback selected at import (``aperiod_sde._kernels.BACKEND`` tells which).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .model import (
    DiffusionSpec,
    DriftSpec,
    HypothesisReport,
    ModelSpec,
    check_hypotheses,
    eval_diffusion,
    eval_drift,
    semigroup_apply,
)
from .noise import (
    NoiseEnsemble,
    TimeGrid,
    coupled_increments,
    path_value,
    sample_ensemble,
    wiener_shift,
)
from .solver import (
    ConvergenceReport,
    PathEnsemble,
    gamma_apply,
    integrate,
    solve_bounded,
    translated_solution,
)

__all__ = [
    "KERNEL_BACKEND",
    "DiffusionSpec",
    "DriftSpec",
    "HypothesisReport",
    "ModelSpec",
    "check_hypotheses",
    "eval_diffusion",
    "eval_drift",
    "semigroup_apply",
    "NoiseEnsemble",
    "TimeGrid",
    "coupled_increments",
    "path_value",
    "sample_ensemble",
    "wiener_shift",
    "ConvergenceReport",
    "PathEnsemble",
    "gamma_apply",
    "integrate",
    "solve_bounded",
    "translated_solution",
]

__version__ = "0.1.0"
