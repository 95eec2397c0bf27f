"""Two-sided Brownian increment ensembles and the shift algebra on them.

The probability space is realized concretely as a finite window of Brownian
increments: an array ``increments[path, step, coord]`` with
``dW_i ~ N(0, q_i dt)``, independent across paths, steps and coordinates.
Path values are prefix sums anchored at the left end of the window
(W(t_start) = 0), so shifting a path is purely a re-indexing of increments
and never needs an anchor correction.

Two shift operations are provided:

* ``wiener_shift`` realizes theta_tau within the stored window, consuming
  margin at one end (callers oversize the grid accordingly);
* ``coupled_increments`` realizes the increment-invariance identity
  dW(u + tau, theta_{-tau} omega) = dW(u, omega): the increment array is
  returned bit-identical with only the window labels moved, which is what
  lets a time-shifted coefficient integration reproduce the tau-translate
  of a solution pathwise.

Randomness is counter-based: path p of an ensemble rooted at ``seed`` draws
from Philox keyed by (seed, p), so ensembles are reproducible bit-for-bit
across platforms, evaluation orders and thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import GridError

__all__ = [
    "TimeGrid",
    "NoiseEnsemble",
    "sample_ensemble",
    "wiener_shift",
    "coupled_increments",
    "path_value",
    "slice_window",
    "coarsen",
    "write_noise_csv",
]

_MASK64 = (1 << 64) - 1
# Relative slack when matching times/shifts to the grid; honest decimal
# representation error is ~1e-16, genuinely off-grid values are >> this.
_ALIGN_RTOL = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with nodes t_start + k*dt, k = 0..n_steps."""

    t_start: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise GridError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise GridError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """All n_steps + 1 node times."""
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def step_times(self) -> np.ndarray:
        """Left endpoints of the n_steps increments."""
        return self.t_start + self.dt * np.arange(self.n_steps)

    def index_of(self, t: float) -> int:
        """Node index of time t; raises GridError when t is off the grid."""
        k = round((t - self.t_start) / self.dt)
        if abs(t - (self.t_start + k * self.dt)) > _ALIGN_RTOL * self.dt:
            raise GridError(f"time {t!r} is not a node of {self}")
        if not 0 <= k <= self.n_steps:
            raise GridError(f"time {t!r} lies outside the grid window {self}")
        return int(k)

    def steps_of(self, tau: float) -> int:
        """Signed step count of a grid-aligned shift tau = j*dt.

        Off-grid shifts are an error, never silently rounded: rounding
        would bias every almost-period scan built on top.
        """
        j = round(tau / self.dt)
        if abs(tau - j * self.dt) > _ALIGN_RTOL * self.dt:
            raise GridError(
                f"shift tau={tau!r} is not an integer multiple of dt={self.dt!r}"
            )
        return int(j)


@dataclass
class NoiseEnsemble:
    """Brownian increment window: the concrete carrier of omega and theta.

    ``increments`` has shape (n_paths, n_steps, dim_noise) and path values
    are W(t) - W(t_start), prefix sums of increments.
    """

    grid: TimeGrid
    n_paths: int
    increments: np.ndarray
    seed: int
    q_eigenvalues: np.ndarray

    @property
    def dim_noise(self) -> int:
        return self.increments.shape[2]

    @property
    def noise_id(self) -> str:
        """Deterministic fingerprint binding solutions to their driving noise."""
        g = self.grid
        return (
            f"philox:{self.seed}:{self.n_paths}"
            f":{g.t_start:.17g}:{g.dt:.17g}:{g.n_steps}"
        )


def _path_generator(seed: int, path: int) -> Generator:
    key = np.array([seed & _MASK64, path & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


def sample_ensemble(grid: TimeGrid, q_eigenvalues, n_paths: int, seed: int) -> NoiseEnsemble:
    """Draw an ensemble of Brownian increment windows.

    Deterministic given (seed, grid, n_paths): identical inputs yield
    bit-identical arrays regardless of thread count or call order, because
    each path consumes its own counter-based stream keyed by (seed, p).
    """
    if n_paths < 1:
        raise GridError(f"n_paths must be >= 1, got {n_paths}")
    q = np.asarray(q_eigenvalues, dtype=float)
    if q.ndim != 1 or q.size < 1:
        raise GridError("q_eigenvalues must be a nonempty 1-d sequence")
    if np.any(q < 0.0):
        raise GridError("q_eigenvalues must be nonnegative")
    m = q.size
    scale = np.sqrt(q * grid.dt)
    increments = np.empty((n_paths, grid.n_steps, m), dtype=float)
    for p in range(n_paths):
        rng = _path_generator(seed, p)
        increments[p] = rng.standard_normal((grid.n_steps, m)) * scale
    return NoiseEnsemble(
        grid=grid,
        n_paths=n_paths,
        increments=increments,
        seed=int(seed),
        q_eigenvalues=q.copy(),
    )


def wiener_shift(ensemble: NoiseEnsemble, tau: float) -> NoiseEnsemble:
    """Shift every path: the output represents theta_tau omega.

    The output increment at time t equals the input increment at time
    t + tau; equivalently output path values obey
    (theta_tau omega)(t) = omega(t + tau) - omega(tau) on shared nodes.
    The surviving window stays inside the stored label range, so each
    shift consumes |tau| of margin instead of wrapping.
    """
    g = ensemble.grid
    j = g.steps_of(tau)
    n_new = g.n_steps - abs(j)
    if n_new < 1:
        raise GridError(
            f"shift tau={tau!r} leaves no window inside the stored grid "
            f"({g.n_steps} steps, |shift|={abs(j)} steps)"
        )
    lo = max(j, 0)
    new_grid = TimeGrid(g.t_start + max(-j, 0) * g.dt, g.dt, n_new)
    return NoiseEnsemble(
        grid=new_grid,
        n_paths=ensemble.n_paths,
        increments=ensemble.increments[:, lo : lo + n_new, :].copy(),
        seed=ensemble.seed,
        q_eigenvalues=ensemble.q_eigenvalues,
    )


def coupled_increments(ensemble: NoiseEnsemble, tau: float) -> NoiseEnsemble:
    """Increment stream of theta_{-tau} omega over its natural window.

    The increments of theta_{-tau} omega at time u + tau are exactly the
    increments of omega at time u, so the array is returned bit-identical
    and only the time origin moves (t_start -> t_start + tau).  Feeding
    this stream to an integration whose coefficients are evaluated at the
    relabeled times realizes X(. + tau, theta_{-tau} .) pathwise with no
    window loss.
    """
    g = ensemble.grid
    j = g.steps_of(tau)
    new_grid = TimeGrid(g.t_start + j * g.dt, g.dt, g.n_steps)
    return NoiseEnsemble(
        grid=new_grid,
        n_paths=ensemble.n_paths,
        increments=ensemble.increments.copy(),
        seed=ensemble.seed,
        q_eigenvalues=ensemble.q_eigenvalues,
    )


def path_value(ensemble: NoiseEnsemble, path_index: int, t: float) -> np.ndarray:
    """W(t) - W(t_start) for one path: prefix sum of its increments."""
    k = ensemble.grid.index_of(t)
    if k == 0:
        return np.zeros(ensemble.dim_noise)
    return ensemble.increments[path_index, :k, :].sum(axis=0)


def slice_window(ensemble: NoiseEnsemble, t_start: float, n_steps: int) -> NoiseEnsemble:
    """Restrict the stored window to [t_start, t_start + n_steps*dt]."""
    g = ensemble.grid
    k0 = g.index_of(t_start)
    if k0 + n_steps > g.n_steps:
        raise GridError(
            f"requested window of {n_steps} steps from {t_start!r} overflows the grid"
        )
    return NoiseEnsemble(
        grid=TimeGrid(g.t_start + k0 * g.dt, g.dt, n_steps),
        n_paths=ensemble.n_paths,
        increments=ensemble.increments[:, k0 : k0 + n_steps, :].copy(),
        seed=ensemble.seed,
        q_eigenvalues=ensemble.q_eigenvalues,
    )


def coarsen(ensemble: NoiseEnsemble, factor: int) -> NoiseEnsemble:
    """Merge consecutive increments in groups of ``factor``.

    The result is the same Brownian window sampled at dt * factor; useful
    for coupling solves across resolutions (scheme-error probes).
    """
    g = ensemble.grid
    if factor < 1 or g.n_steps % factor != 0:
        raise GridError(f"factor {factor} does not divide n_steps={g.n_steps}")
    n_new = g.n_steps // factor
    inc = ensemble.increments.reshape(
        ensemble.n_paths, n_new, factor, ensemble.dim_noise
    ).sum(axis=2)
    return NoiseEnsemble(
        grid=TimeGrid(g.t_start, g.dt * factor, n_new),
        n_paths=ensemble.n_paths,
        increments=inc,
        seed=ensemble.seed,
        q_eigenvalues=ensemble.q_eigenvalues,
    )


def write_noise_csv(ensemble: NoiseEnsemble, path) -> None:
    """Export as CSV rows (path, t, dW_1..dW_m) with 17 significant digits."""
    m = ensemble.dim_noise
    header = "path,t," + ",".join(f"dW_{i + 1}" for i in range(m))
    step_times = ensemble.grid.step_times
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for p in range(ensemble.n_paths):
            for k in range(ensemble.grid.n_steps):
                row = ",".join(
                    f"{v:.17g}" for v in ensemble.increments[p, k, :]
                )
                fh.write(f"{p},{step_times[k]:.17g},{row}\n")
