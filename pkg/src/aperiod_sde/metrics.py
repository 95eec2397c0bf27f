"""Metric toolbox: convergence-in-probability distance, p-mean distances,
truncated-cost optimal transport on empirical laws, and path-space
semidistances.

All distance values except ``lp_dist`` live in [0, 1] because the ground
cost is truncated at 1 *before* any averaging or assignment.  The
empirical transport distance is solved exactly (optimal assignment between
equal-weight atom clouds) up to ``N_EXACT`` atoms; larger clouds are
deterministically subsampled first, since the artifact only ever needs the
metric to separate small values from clearly non-small ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import GridError

__all__ = [
    "N_EXACT",
    "EmpiricalLaw",
    "marginal_law",
    "joint_law",
    "path_law",
    "d0",
    "lp_dist",
    "wasserstein_trunc",
    "path_semidistance",
    "wass_window",
]

N_EXACT = 512


@dataclass
class EmpiricalLaw:
    """Equal-weight sample cloud in state space or windowed path space.

    kind is "marginal" (samples (n, d)), "joint" (samples (n, k, d)) or
    "path" (samples (n, nodes, d)); ``meta`` records the sample geometry
    that must agree for two laws to be comparable.
    """

    samples: np.ndarray
    kind: str
    meta: tuple = ()

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape[0] < 1:
            raise ValueError("empirical law needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("empirical law samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def marginal_law(ensemble, t: float) -> EmpiricalLaw:
    """One-dimensional marginal cloud of a path ensemble at a grid node."""
    return EmpiricalLaw(ensemble.at_time(t), "marginal")


def joint_law(ensemble, times) -> EmpiricalLaw:
    """Joint cloud at a time tuple; atoms are (k, d) blocks per path."""
    idx = [ensemble.grid.index_of(t) for t in times]
    samples = ensemble.values[:, idx, :]
    return EmpiricalLaw(samples, "joint", (len(idx),))


def path_law(ensemble, window) -> EmpiricalLaw:
    """Windowed path cloud over [window[0], window[1]]."""
    samples = ensemble.window(window[0], window[1])
    return EmpiricalLaw(samples, "path", (samples.shape[1],))


def _paired(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"paired samples must share a shape, got {x.shape} vs {y.shape}")
    if x.ndim == 1:
        x = x[:, None]
        y = y[:, None]
    return x, y


def d0(x, y) -> float:
    """E(dist ^ 1): mean truncated distance between paired samples.

    The pairing matters: samples at the same index must live on the same
    underlying outcome.  Metrizes convergence in probability.
    """
    x, y = _paired(x, y)
    dist = np.linalg.norm(x - y, axis=-1)
    return float(np.minimum(dist, 1.0).mean())


def lp_dist(p: float, x, y) -> float:
    """(E dist^p)^(1/p) between paired samples, p >= 1 (not truncated)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    x, y = _paired(x, y)
    dist = np.linalg.norm(x - y, axis=-1)
    return float(np.mean(dist**p) ** (1.0 / p))


def _subsample_idx(n: int, m: int, seed: int) -> np.ndarray:
    """Deterministic seed-rotated stride: m distinct indices out of n."""
    j = np.arange(m, dtype=np.int64)
    return (seed + (j * n) // m) % n


def _atom_cost(a: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    """Pairwise truncated atom distances, shape (n, n)."""
    if kind == "marginal":
        cost = cdist(a, b)
    else:
        # joint/path atoms: metric is the max over time layers of the
        # per-layer Euclidean distance.
        cost = np.zeros((a.shape[0], b.shape[0]))
        for layer in range(a.shape[1]):
            np.maximum(cost, cdist(a[:, layer, :], b[:, layer, :]), out=cost)
    return np.minimum(cost, 1.0)


def wasserstein_trunc(mu: EmpiricalLaw, nu: EmpiricalLaw, subsample_seed: int = 0) -> float:
    """Truncated-cost transport distance between equal-weight clouds.

    Exact optimal assignment with ground cost min(dist, 1); symmetric by
    construction (arguments are canonically ordered before solving) and a
    true metric on clouds of equal size.  Clouds larger than N_EXACT, or
    of unequal sizes, are first subsampled deterministically.
    """
    if mu.kind != nu.kind or mu.meta != nu.meta:
        raise ValueError(
            f"laws are not comparable: {mu.kind}{mu.meta} vs {nu.kind}{nu.meta}"
        )
    a, b = mu.samples, nu.samples
    target = min(a.shape[0], b.shape[0], N_EXACT)
    if a.shape[0] != target:
        a = a[_subsample_idx(a.shape[0], target, subsample_seed)]
    if b.shape[0] != target:
        b = b[_subsample_idx(b.shape[0], target, subsample_seed)]
    # Canonical argument order makes the float result exactly symmetric.
    if a.tobytes() > b.tobytes():
        a, b = b, a
    cost = _atom_cost(a, b, mu.kind)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / target)


def path_semidistance(window_a, window_b, metric=None) -> float:
    """sup over shared window nodes of the per-node distance.

    ``metric`` defaults to the Euclidean norm of the node difference; a
    callable (xa, xb) -> float may be supplied instead.
    """
    a = np.asarray(window_a, dtype=float)
    b = np.asarray(window_b, dtype=float)
    if a.shape != b.shape:
        raise GridError(f"windows must share a grid, got {a.shape} vs {b.shape}")
    if metric is None:
        return float(np.linalg.norm(a - b, axis=-1).max())
    return max(float(metric(a[k], b[k])) for k in range(a.shape[0]))


def wass_window(ensemble_a, ensemble_b, window, subsample_seed: int = 0) -> float:
    """Truncated transport distance between windowed path laws.

    Atoms are whole path segments over the window; the atom metric is the
    sup over window nodes of the state distance, truncated at 1.
    """
    return wasserstein_trunc(
        path_law(ensemble_a, window),
        path_law(ensemble_b, window),
        subsample_seed=subsample_seed,
    )
