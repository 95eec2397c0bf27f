"""Known-answer controls for the detector suite.

Negative control: a spike-train process X(t, omega) = f(t + omega) with
omega uniform on [0, 1] and f a sum of triangular spikes of height
1/eps_n and half-width eps_n centered at (2k+1) n.  Every truncation of f
is periodic (hence the shift-coupled distances admit small values at the
common lattice periods), yet the expected truncated oscillation over a
fixed window stays pinned at 1: the separating example showing that
shift-coupled almost periodicity does not control path-law regularity.

Positive control: the stationary Ornstein-Uhlenbeck process, simulated by
its exact transition kernel so every detector has closed-form targets
(variance sigma^2 q / (2 lambda), lag-s autocovariance variance * e^(-lambda s)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, ModelError
from .noise import TimeGrid
from .solver import PathEnsemble

__all__ = [
    "UrsellSpec",
    "ursell_f",
    "ursell_probe_times",
    "ursell_omegas",
    "ursell_ensemble",
    "ursell_grid",
    "stepanov_shift_distance",
    "verify_not_appd",
    "witness_report",
    "common_lattice_period",
    "ou_reference",
]

_MASK64 = (1 << 64) - 1


@dataclass
class UrsellSpec:
    """Spike-train construction parameters.

    eps_seq[n-1] is the half-width (and reciprocal height) of the n-th
    spike family, supported on the lattice (2k+1) n; the outer sum is
    truncated at n_max so the simulated window carries no truncation error
    from families it never meets at witness points.
    """

    eps_seq: np.ndarray
    n_max: int

    def __post_init__(self):
        self.eps_seq = np.asarray(self.eps_seq, dtype=float)
        self.n_max = int(self.n_max)

    def validate(self) -> None:
        if self.n_max < 0:
            raise ModelError("n_max must be >= 0")
        if self.eps_seq.shape != (self.n_max,):
            raise ModelError(
                f"eps_seq must have length n_max={self.n_max}, got {self.eps_seq.shape}"
            )
        if self.n_max and not (np.all(self.eps_seq > 0.0) and np.all(self.eps_seq <= 1.0)):
            raise ModelError("eps_seq entries must lie in (0, 1]")

    @property
    def resolution_dt(self) -> float:
        """Largest step resolving every spike peak: min eps / 4."""
        if self.n_max == 0:
            return 0.25
        return float(self.eps_seq.min()) / 4.0


def ursell_f(t, spec: UrsellSpec):
    """Evaluate the spike sum f(t) = sum_{n <= n_max} f_n(t), vectorized."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for n in range(1, spec.n_max + 1):
        eps = spec.eps_seq[n - 1]
        # Nearest odd-multiple center (2k+1) n of the n-th lattice.
        k = np.round((t / n - 1.0) / 2.0)
        center = (2.0 * k + 1.0) * n
        dist = np.abs(t - center)
        total += np.where(dist <= eps, (1.0 - dist / eps) / eps, 0.0)
    return total


def ursell_probe_times(spec: UrsellSpec) -> np.ndarray:
    """Witness probe times t_n = n(2n+1) - 1 for n = 1..n_max."""
    n = np.arange(1, spec.n_max + 1, dtype=float)
    return n * (2.0 * n + 1.0) - 1.0


def common_lattice_period(spec: UrsellSpec) -> float:
    """Least common period of the truncated spike lattices (lcm of 2n)."""
    period = 1
    for n in range(1, spec.n_max + 1):
        period = int(np.lcm(period, 2 * n))
    return float(period)


def ursell_omegas(n_paths: int, seed: int) -> np.ndarray:
    """Stratified phases omega_p = (p + u_p)/n_paths, u_p uniform per path.

    Stratification stabilizes the quadrature-like expectations over [0, 1]
    that every Ursell quantity reduces to.
    """
    omegas = np.empty(n_paths)
    for p in range(n_paths):
        key = np.array([seed & _MASK64, p & _MASK64], dtype=np.uint64)
        u = np.random.Generator(np.random.Philox(key=key)).random()
        omegas[p] = (p + u) / n_paths
    return omegas


def ursell_grid(spec: UrsellSpec, window_hi: float = 2.0, dt: float | None = None) -> TimeGrid:
    """Grid covering all witness probes plus the observation window."""
    if dt is None:
        dt = spec.resolution_dt
    t_max = float(ursell_probe_times(spec).max()) + window_hi if spec.n_max else window_hi
    n_steps = int(np.ceil(t_max / dt))
    return TimeGrid(0.0, dt, max(n_steps, 1))


def ursell_ensemble(
    spec: UrsellSpec,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    omegas=None,
) -> PathEnsemble:
    """Sample paths t -> f(t + omega_p) on the grid.

    ``omegas`` may be supplied explicitly (tests pin omega = 0 to compare a
    path against f directly); by default they follow the stratified scheme.
    """
    spec.validate()
    if omegas is None:
        omegas = ursell_omegas(n_paths, seed)
    omegas = np.asarray(omegas, dtype=float)
    if omegas.shape != (n_paths,):
        raise ModelError("omegas must have one entry per path")
    times = grid.times
    values = ursell_f(times[None, :] + omegas[:, None], spec)[:, :, None]
    return PathEnsemble(
        grid=grid,
        n_paths=n_paths,
        values=values,
        noise_id=f"ursell:{seed}:{n_paths}:{grid.t_start:.17g}:{grid.dt:.17g}:{grid.n_steps}",
    )


def stepanov_shift_distance(
    spec: UrsellSpec,
    tau: float,
    t_probes=None,
    n_omega: int = 4096,
) -> float:
    """sup over probes of the phase-averaged shift discrepancy of f.

    Midpoint quadrature of integral_0^1 |f(t + tau + w) - f(t + w)| dw; at
    a common lattice period of the truncated spike families this vanishes.
    """
    spec.validate()
    if t_probes is None:
        probes = [0.0, 0.5, 1.0]
        if spec.n_max:
            probes.extend(float(t) for t in ursell_probe_times(spec))
    else:
        probes = [float(t) for t in t_probes]
    w = (np.arange(n_omega) + 0.5) / n_omega
    worst = 0.0
    for t in probes:
        gap = np.abs(ursell_f(t + tau + w, spec) - ursell_f(t + w, spec)).mean()
        worst = max(worst, float(gap))
    return worst


def witness_report(spec: UrsellSpec, delta: float, dt: float) -> list[str]:
    """Validate the witness construction; returns a list of defect messages.

    Checks the two ways the witness bound can silently break: grid steps
    too coarse to land near spike peaks, and spike families interfering at
    a witness pair closely enough to deflate the truncated difference
    below 1.
    """
    spec.validate()
    problems: list[str] = []
    if spec.n_max == 0:
        return problems
    if dt > spec.resolution_dt + 1e-12:
        problems.append(
            f"dt={dt:.6g} does not resolve the narrowest spike: need dt <= "
            f"min(eps)/4 = {spec.resolution_dt:.6g}"
        )
    if not 0.0 < delta <= 1.0:
        problems.append(f"delta={delta:.6g} must lie in (0, 1]")
        return problems
    for n in range(1, spec.n_max + 1):
        peak_t = n * (2.0 * n + 1.0)
        # Worst grid snap moves each evaluation by dt/2 along t.
        hi = float(ursell_f(peak_t + dt / 2.0, spec))
        lo = float(ursell_f(peak_t - delta + dt / 2.0, spec))
        if abs(hi - lo) < 1.0:
            problems.append(
                f"witness {n}: spike families overlap at t={peak_t:.6g}; "
                f"truncated witness difference {abs(hi - lo):.6g} < 1"
            )
    return problems


def verify_not_appd(
    spec: UrsellSpec,
    delta: float,
    window=(0.0, 2.0),
    n_paths: int = 512,
    seed: int = 0,
    dt: float | None = None,
) -> float:
    """Evaluate the oscillation lower-bound witness on the sampled ensemble.

    For each probed n the two per-path evaluation points t_n + 1 - omega
    and t_n + 1 - delta - omega collapse onto the fixed pair
    (peak, peak - delta) of the n-th spike, so the truncated difference is
    1 for every path once delta clears the spike half-width; the returned
    sup over n lower-bounds the tightness modulus over the window.
    """
    spec.validate()
    if spec.n_max == 0:
        return 0.0
    lo, hi = window
    if not 0.0 < delta <= hi - lo:
        raise GridError(f"delta={delta!r} must lie in (0, window length]")
    grid = ursell_grid(spec, window_hi=hi, dt=dt)
    omegas = ursell_omegas(n_paths, seed)
    ensemble = ursell_ensemble(spec, grid, n_paths, seed, omegas=omegas)
    values = ensemble.values[:, :, 0]
    best = 0.0
    for t_n in ursell_probe_times(spec):
        t_r = t_n + (hi - lo) / 2.0 - omegas
        t_s = t_r - delta
        if t_s.min() < grid.t_start - grid.dt or t_r.max() > grid.t_end + grid.dt:
            raise GridError(f"witness probe t={t_n} falls outside the grid")
        idx_r = np.clip(np.round((t_r - grid.t_start) / grid.dt).astype(int), 0, grid.n_steps)
        idx_s = np.clip(np.round((t_s - grid.t_start) / grid.dt).astype(int), 0, grid.n_steps)
        diffs = np.abs(values[np.arange(n_paths), idx_r] - values[np.arange(n_paths), idx_s])
        best = max(best, float(np.minimum(diffs, 1.0).mean()))
    return best


def ou_reference(lam: float, sigma: float, q: float, grid: TimeGrid, n_paths: int, seed: int) -> PathEnsemble:
    """Exact-in-distribution stationary Ornstein-Uhlenbeck ensemble.

    Transition X(t+dt) = e^(-lam dt) X(t) + eta with
    eta ~ N(0, sigma^2 q (1 - e^(-2 lam dt)) / (2 lam)), initialized from
    the stationary law N(0, sigma^2 q / (2 lam)).
    """
    if lam <= 0.0:
        raise ModelError(f"lambda must be > 0, got {lam}")
    stationary_sd = abs(sigma) * np.sqrt(q / (2.0 * lam))
    decay = np.exp(-lam * grid.dt)
    step_sd = abs(sigma) * np.sqrt(q * (1.0 - np.exp(-2.0 * lam * grid.dt)) / (2.0 * lam))
    draws = np.empty((n_paths, grid.n_steps + 1))
    for p in range(n_paths):
        key = np.array([seed & _MASK64, p & _MASK64], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        draws[p] = rng.standard_normal(grid.n_steps + 1)
    values = np.empty((n_paths, grid.n_steps + 1, 1))
    values[:, 0, 0] = stationary_sd * draws[:, 0]
    for k in range(grid.n_steps):
        values[:, k + 1, 0] = decay * values[:, k, 0] + step_sd * draws[:, k + 1]
    return PathEnsemble(
        grid=grid,
        n_paths=n_paths,
        values=values,
        noise_id=f"ou:{seed}:{n_paths}:{grid.t_start:.17g}:{grid.dt:.17g}:{grid.n_steps}",
    )
