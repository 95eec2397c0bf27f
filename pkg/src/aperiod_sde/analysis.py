"""Almost-periodicity detection under the shift coupling.

The central quantity is the coupled shift distance

    D(tau) = sup_t  d0( X(t + tau, theta_{-tau} .), X(t, .) ),

estimated over a user-chosen evaluation grid strictly inside the
post-burn-in window.  tau is a detected eps-almost period when
D(tau) <= eps; relative density of the accepted set is decided on the
finite scan range (the verdict is explicitly range-relative).

Distributional detectors compare empirical laws of the *same* solution at
shifted times (the shift being measure preserving, the law of the
translate at t is the law at t + tau): one-dimensional marginals, joint
tuples with a max-over-coordinates atom metric, and windowed path laws.
A tightness modulus (uniform expected truncated oscillation) and
uniform-integrability diagnostics round out the toolbox; the modulus is
the quantity whose failure to vanish rules out path-distribution almost
periodicity even when all coupled distances are small.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.ndimage import maximum_filter1d

from .errors import GridError
from .metrics import d0, joint_law, lp_dist, marginal_law, path_law, wasserstein_trunc
from .model import ModelSpec
from .noise import NoiseEnsemble
from .solver import PathEnsemble, solve_bounded, translated_solution

__all__ = [
    "AlmostPeriodReport",
    "DistributionalReport",
    "BochnerReport",
    "UIReport",
    "coupled_shift_distance",
    "coupled_shift_distance_pmean",
    "shift_distance_profile",
    "scan_almost_periods",
    "bochner_double_sequence_test",
    "make_sde_evaluator",
    "apod_distance",
    "apfd_distance",
    "appd_distance",
    "distributional_profile",
    "modulus_tightness",
    "tightness_check",
    "uniform_integrability_check",
    "continuity_in_probability",
]


@dataclass
class AlmostPeriodReport:
    """Accepted almost periods on a scan grid and their largest gap.

    ``max_gap`` includes the leads from the range edges to the first/last
    accepted candidate, so an empty accepted set reports the full range
    length.  ``inclusion_length`` is the detected interval length l such
    that every subinterval of the scan range of that length met the
    accepted set; the relative-density verdict compares it to ``l_max``
    and is meaningful only for the scanned range.
    """

    epsilon: float
    tau_grid: np.ndarray
    accepted: np.ndarray
    max_gap: float
    inclusion_length: float
    relatively_dense: bool

    def as_text(self) -> str:
        return (
            f"epsilon={self.epsilon:.17g}\n"
            f"scan_start={self.tau_grid[0]:.17g}\n"
            f"scan_stop={self.tau_grid[-1]:.17g}\n"
            f"accepted_count={self.accepted.size}\n"
            f"max_gap={self.max_gap:.17g}\n"
            f"inclusion_length={self.inclusion_length:.17g}\n"
            f"relatively_dense={'true' if self.relatively_dense else 'false'}\n"
        )


@dataclass
class DistributionalReport:
    """Distance-versus-shift profile for one distributional mode."""

    mode: str
    taus: np.ndarray
    values: np.ndarray
    epsilon_reports: dict[float, AlmostPeriodReport] = field(default_factory=dict)


@dataclass
class BochnerReport:
    """Finite-prefix double-sequence verdict: true / false / inconclusive."""

    verdict: str
    discrepancy: float
    kept_outer: list[int]
    stability: float


@dataclass
class UIReport:
    """Tail second-moment profile sup_t E(||X(t)||^p 1{||X(t)|| > R})."""

    p: float
    thresholds: np.ndarray
    values: np.ndarray


def _eval_indices(grid, t_eval_grid):
    idx = [grid.index_of(t) for t in t_eval_grid]
    if not idx:
        raise GridError("evaluation grid is empty")
    return idx


def coupled_shift_distance(
    model: ModelSpec,
    noise: NoiseEnsemble,
    tau: float,
    t_eval_grid,
    tol: float = 1e-4,
    max_iter: int = 60,
    base: PathEnsemble | None = None,
) -> float:
    """sup over the evaluation grid of d0 between the tau-translate and the base.

    Both ensembles are solved against the same increments, so the pairing
    is pathwise; tau = 0 gives exactly 0.
    """
    if base is None:
        base, _ = solve_bounded(model, noise, tol=tol, max_iter=max_iter)
    idx = _eval_indices(noise.grid, t_eval_grid)
    shifted = translated_solution(model, noise, tau, tol=tol, max_iter=max_iter)
    return max(d0(shifted.values[:, k, :], base.values[:, k, :]) for k in idx)


def coupled_shift_distance_pmean(
    model: ModelSpec,
    noise: NoiseEnsemble,
    tau: float,
    t_eval_grid,
    p: float,
    tol: float = 1e-4,
    max_iter: int = 60,
    base: PathEnsemble | None = None,
) -> float:
    """Same coupling as ``coupled_shift_distance`` with the p-mean distance."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if base is None:
        base, _ = solve_bounded(model, noise, tol=tol, max_iter=max_iter)
    idx = _eval_indices(noise.grid, t_eval_grid)
    shifted = translated_solution(model, noise, tau, tol=tol, max_iter=max_iter)
    return max(lp_dist(p, shifted.values[:, k, :], base.values[:, k, :]) for k in idx)


def shift_distance_profile(
    model: ModelSpec,
    noise: NoiseEnsemble,
    taus,
    t_eval_grid,
    p: float = 2.0,
    tol: float = 1e-4,
    max_iter: int = 60,
    threads: int = 1,
):
    """Coupled d0 and p-mean distances over a whole tau grid.

    The base solution is solved once and shared; per-tau re-solves are
    independent and may run on a thread pool.  Results are assembled in
    fixed tau order and are identical for any thread count.
    """
    taus = np.asarray(taus, dtype=float)
    base, conv = solve_bounded(model, noise, tol=tol, max_iter=max_iter)
    idx = _eval_indices(noise.grid, t_eval_grid)
    d0_vals = np.empty(taus.size)
    lp_vals = np.empty(taus.size)

    def work(i: int) -> None:
        shifted = translated_solution(model, noise, taus[i], tol=tol, max_iter=max_iter)
        d0_vals[i] = max(
            d0(shifted.values[:, k, :], base.values[:, k, :]) for k in idx
        )
        lp_vals[i] = max(
            lp_dist(p, shifted.values[:, k, :], base.values[:, k, :]) for k in idx
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(taus.size)))
    else:
        for i in range(taus.size):
            work(i)
    return d0_vals, lp_vals, base, conv


def _distance_arrays(distance) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(distance, Mapping):
        taus = np.array(sorted(distance), dtype=float)
        values = np.array([distance[t] for t in taus], dtype=float)
    else:
        taus, values = distance
        taus = np.asarray(taus, dtype=float)
        values = np.asarray(values, dtype=float)
    if taus.size == 0:
        raise GridError("empty tau grid")
    if taus.size != values.size:
        raise GridError("tau grid and distance values have different lengths")
    if taus.size > 2:
        steps = np.diff(taus)
        if np.any(np.abs(steps - steps[0]) > 1e-9 * max(abs(steps[0]), 1.0)):
            raise GridError("tau candidates must form an arithmetic grid")
    return taus, values


def scan_almost_periods(distance, epsilon: float, l_max: float) -> AlmostPeriodReport:
    """Threshold a distance profile and measure gaps in the accepted set."""
    taus, values = _distance_arrays(distance)
    accepted = taus[values <= epsilon]
    if accepted.size == 0:
        max_gap = float(taus[-1] - taus[0])
    else:
        gaps = [accepted[0] - taus[0], taus[-1] - accepted[-1]]
        if accepted.size > 1:
            gaps.append(float(np.diff(accepted).max()))
        max_gap = float(max(gaps))
    return AlmostPeriodReport(
        epsilon=float(epsilon),
        tau_grid=taus,
        accepted=accepted,
        max_gap=max_gap,
        inclusion_length=max_gap,
        relatively_dense=bool(max_gap <= l_max),
    )


def make_sde_evaluator(
    model: ModelSpec,
    noise: NoiseEnsemble,
    tol: float = 1e-4,
    max_iter: int = 60,
) -> Callable[[float, float], np.ndarray]:
    """Evaluator (t, shift) -> paired sample cloud of the shift-translate.

    Solves per distinct grid-aligned shift (cached), so double-sequence
    probes share work across probe times.
    """
    cache: dict[int, PathEnsemble] = {}

    def evaluator(t: float, shift: float) -> np.ndarray:
        j = noise.grid.steps_of(shift)
        if j not in cache:
            cache[j] = translated_solution(model, noise, shift, tol=tol, max_iter=max_iter)
        ensemble = cache[j]
        return ensemble.values[:, noise.grid.index_of(t), :]

    return evaluator


def bochner_double_sequence_test(
    evaluator: Callable[[float, float], np.ndarray],
    alpha_seq,
    beta_seq,
    t_probe_grid,
    tol: float,
    tail: int = 3,
) -> BochnerReport:
    """Finite-prefix double-sequence criterion with three-valued verdict.

    The iterated limit is surrogated by the corner of the alpha-prefix at
    the last *stabilized* beta index, where a beta index counts as
    stabilized when the evaluations along the alpha tail are d0-Cauchy
    within tol/2 at every probe (greedy filtering: unstable columns are
    dropped).  The diagonal limit is surrogated by the last diagonal
    element, with the same tail-stability requirement.  A prefix that
    leaves fewer than ``tail + 1`` stabilized columns, or whose surrogate
    tails fluctuate above tol/2, is declared inconclusive: a finite prefix
    cannot certify that the limits exist.  Otherwise the verdict is true
    exactly when the two surrogates agree within tol at every probe.
    """
    alpha = [float(a) for a in alpha_seq]
    beta = [float(b) for b in beta_seq]
    probes = [float(t) for t in t_probe_grid]
    n_a, n_b = len(alpha), len(beta)
    n_diag = min(n_a, n_b)
    stab = tol / 2.0
    if min(n_a, n_b) < tail + 1:
        return BochnerReport("inconclusive", float("nan"), [], float("nan"))

    cache: dict[tuple[int, int], list[np.ndarray]] = {}

    def ev(a: int, b: int) -> list[np.ndarray]:
        if (a, b) not in cache:
            shift = alpha[a] + beta[b]
            cache[(a, b)] = [np.asarray(evaluator(t, shift), dtype=float) for t in probes]
        return cache[(a, b)]

    def dsup(e1: list[np.ndarray], e2: list[np.ndarray]) -> float:
        return max(d0(x, y) for x, y in zip(e1, e2))

    # Greedy Cauchy filter over beta columns: keep those whose alpha tail
    # has settled onto the corner row.
    kept: list[int] = []
    for b in range(n_b):
        corner = ev(n_a - 1, b)
        wobble = max(dsup(ev(a, b), corner) for a in range(n_a - 1 - tail, n_a - 1))
        if wobble <= stab:
            kept.append(b)
    if len(kept) < tail + 1:
        return BochnerReport("inconclusive", float("nan"), kept, float("nan"))

    iterated = ev(n_a - 1, kept[-1])
    outer_wobble = max(dsup(ev(n_a - 1, b), iterated) for b in kept[-1 - tail : -1])
    diag = ev(n_diag - 1, n_diag - 1)
    diag_wobble = max(dsup(ev(k, k), diag) for k in range(n_diag - 1 - tail, n_diag - 1))
    stability = max(outer_wobble, diag_wobble)
    if stability > stab:
        return BochnerReport("inconclusive", float("nan"), kept, stability)

    discrepancy = dsup(iterated, diag)
    verdict = "true" if discrepancy <= tol else "false"
    return BochnerReport(verdict, discrepancy, kept, stability)


def apod_distance(ensemble: PathEnsemble, t: float, tau: float) -> float:
    """Truncated transport distance between marginals at t and t + tau.

    The shift being measure preserving, the law of the tau-translate at t
    is the law of X(t + tau), so no coupled re-solve is needed here.
    """
    return wasserstein_trunc(marginal_law(ensemble, t), marginal_law(ensemble, t + tau))


def apfd_distance(ensemble: PathEnsemble, t_tuple, tau: float) -> float:
    """Joint-law transport distance at a time tuple versus its tau-shift.

    Atoms are tuples of states; the atom metric is the max over tuple
    coordinates of the per-time distance.
    """
    shifted = [t + tau for t in t_tuple]
    return wasserstein_trunc(joint_law(ensemble, t_tuple), joint_law(ensemble, shifted))


def appd_distance(ensemble: PathEnsemble, window, tau: float) -> float:
    """Windowed path-law transport distance between a window and its shift."""
    lo, hi = window
    return wasserstein_trunc(
        path_law(ensemble, (lo, hi)), path_law(ensemble, (lo + tau, hi + tau))
    )


def distributional_profile(
    ensemble: PathEnsemble,
    mode: str,
    taus,
    epsilons=(),
    l_max: float = float("inf"),
    t: float = 0.0,
    t_tuple=(0.0,),
    window=(0.0, 1.0),
) -> DistributionalReport:
    """Distance-versus-shift profile for apod / apfd / appd on one ensemble."""
    taus = np.asarray(taus, dtype=float)
    if mode == "apod":
        values = np.array([apod_distance(ensemble, t, tau) for tau in taus])
    elif mode == "apfd":
        values = np.array([apfd_distance(ensemble, t_tuple, tau) for tau in taus])
    elif mode == "appd":
        values = np.array([appd_distance(ensemble, window, tau) for tau in taus])
    else:
        raise ValueError(f"unknown distributional mode {mode!r}")
    report = DistributionalReport(mode=mode, taus=taus, values=values)
    for eps in epsilons:
        report.epsilon_reports[eps] = scan_almost_periods((taus, values), eps, l_max)
    return report


def modulus_tightness(ensemble: PathEnsemble, window, delta: float) -> float:
    """Uniform expected truncated oscillation over a sliding window.

    sup over window positions of E( sup_{|r-s| < delta} dist(X(t+r), X(t+s)) ^ 1 ),
    with r, s ranging over the window nodes.  Vanishing as delta -> 0 is
    what upgrades finite-dimensional to path-distribution almost
    periodicity; a uniform positive lower bound rules the upgrade out.
    """
    grid = ensemble.grid
    lo, hi = window
    a = grid.steps_of(lo)
    b = grid.steps_of(hi)
    if b < a:
        raise GridError(f"empty window {window!r}")
    if delta < grid.dt:
        raise GridError(f"delta={delta!r} is below the grid resolution dt={grid.dt!r}")
    w = b - a  # window step count, w + 1 nodes
    ratio = delta / grid.dt
    max_lag = min(int(np.ceil(ratio - 1e-9)) - 1, w)
    n_nodes = grid.n_steps + 1
    n_pos = n_nodes - w
    if n_pos < 1:
        raise GridError("window does not fit inside the grid")
    if max_lag < 1:
        return 0.0
    osc = np.zeros((ensemble.n_paths, n_pos))
    for lag in range(1, max_lag + 1):
        diffs = np.linalg.norm(
            ensemble.values[:, lag:, :] - ensemble.values[:, :-lag, :], axis=2
        )
        size = w - lag + 1
        filt = maximum_filter1d(diffs, size=size, axis=1, mode="constant", cval=-np.inf)
        # filt[i] covers input[i - size//2 : i - size//2 + size]; the window
        # starting at u0 sits at index u0 + size//2.
        start = size // 2
        np.maximum(osc, filt[:, start : start + n_pos], out=osc)
    per_pos = np.minimum(osc, 1.0).mean(axis=0)
    return float(per_pos.max())


def tightness_check(ensemble: PathEnsemble, epsilon: float) -> float:
    """Smallest ball radius containing all marginals up to mass epsilon.

    Doubling search for an upper bracket followed by bisection; returns
    the smallest R (to relative precision 1e-3) such that at every grid
    node the fraction of paths with ||X(t)|| > R is at most epsilon.
    """
    norms = np.linalg.norm(ensemble.values, axis=2)

    def excess(radius: float) -> float:
        return float((norms > radius).mean(axis=0).max())

    if excess(0.0) <= epsilon:
        return 0.0
    hi = 1.0
    while excess(hi) > epsilon:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("tightness search diverged (non-finite values?)")
    lo = hi / 2.0
    while excess(lo) <= epsilon:
        hi = lo
        lo /= 2.0
        if lo < 1e-12:
            return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if excess(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-3 * hi:
            break
    return hi


def uniform_integrability_check(ensemble: PathEnsemble, p: float, threshold_grid) -> UIReport:
    """Tail p-th moments sup_t E(||X(t)||^p 1{||X(t)|| > R}) per threshold R."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    thresholds = np.asarray(threshold_grid, dtype=float)
    norms = np.linalg.norm(ensemble.values, axis=2)
    powed = norms**p
    values = np.array(
        [float((powed * (norms > r)).mean(axis=0).max()) for r in thresholds]
    )
    return UIReport(p=float(p), thresholds=thresholds, values=values)


def continuity_in_probability(ensemble: PathEnsemble, times) -> tuple[float, float]:
    """Grid-level continuity certificate: (max adjacent d0, per-unit-time rate).

    This is an estimate on the evaluation grid, not a proof of continuity;
    no quantitative modulus is available to test against.
    """
    times = sorted(float(t) for t in times)
    if len(times) < 2:
        return 0.0, 0.0
    worst = 0.0
    rate = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        gap = d0(ensemble.at_time(t1), ensemble.at_time(t0))
        worst = max(worst, gap)
        if t1 > t0:
            rate = max(rate, gap / (t1 - t0))
    return worst, rate
