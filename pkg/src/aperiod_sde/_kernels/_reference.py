"""Pure-numpy fallback for the mild-integration kernels.

Vectorized over paths, stepping in time.  The elementwise expression
mirrors the compiled kernel operation-for-operation so the two backends
agree to the last few ulps (the compiled build disables FP contraction).
"""

import numpy as np

BACKEND = "numpy"


def gamma_pass(out, x_in, incr, exp_dt, forcing, sigma_t, drift_gain, diff_gain, dt):
    """One sweep of the mild convolution recursion.

    out, x_in : (n_paths, n_steps+1, d), incr : (n_paths, n_steps, m),
    exp_dt : (d,), forcing : (n_steps, d), sigma_t : (n_steps, k) with
    k = min(d, m).  Coefficients are read off the frozen iterate ``x_in``
    at the left node of each step; ``out[:, 0, :]`` must be preset.
    """
    n_steps = incr.shape[1]
    k = sigma_t.shape[1]
    for j in range(n_steps):
        x = x_in[:, j, :]
        s = x / (1.0 + np.abs(x))
        step = out[:, j, :] + (forcing[j] + drift_gain * s) * dt
        if k:
            step[:, :k] += (sigma_t[j] + diff_gain * s[:, :k]) * incr[:, j, :k]
        np.multiply(exp_dt, step, out=out[:, j + 1, :])
    return out


def integrate_pass(out, incr, exp_dt, forcing, sigma_t, drift_gain, diff_gain, dt):
    """Forward exponential-Euler sweep; like gamma_pass but self-referential.

    ``out[:, 0, :]`` holds the initial condition and coefficients are read
    off the evolving state itself.
    """
    n_steps = incr.shape[1]
    k = sigma_t.shape[1]
    for j in range(n_steps):
        x = out[:, j, :]
        s = x / (1.0 + np.abs(x))
        step = x + (forcing[j] + drift_gain * s) * dt
        if k:
            step[:, :k] += (sigma_t[j] + diff_gain * s[:, :k]) * incr[:, j, :k]
        np.multiply(exp_dt, step, out=out[:, j + 1, :])
    return out
