"""Truncated Hilbert-space model: diagonal dissipative generator plus a
closed drift/diffusion catalog.

The state space is R^d, standing in for the leading d eigenmodes of a
dissipative generator.  The generator is diagonal with eigenvalues
-lambda_i < 0, so the semigroup acts coordinatewise as exp(-lambda_i t) and
contracts at rate delta = min_i lambda_i with constant 1.  Drift and
diffusion are drawn from a fixed catalog (quasi-periodic trigonometric
forcing plus a saturating nonlinearity) whose Lipschitz and growth
constants are available in closed form, so the solvability check is exact
arithmetic rather than an estimate.

Catalog:

    F(t, x) = b + sum_j a_j cos(w_j t + phi_j) + c * s(x)
    G(t, x) = diag( sigma_i(t) + gamma * s(x)_i ),   i < min(d, m)
    sigma_i(t) = base_sigma_i * (1 + sum_j alpha_j cos(w_j t + phi_j))

with s(u) = u / (1 + |u|) applied componentwise (1-Lipschitz, |s| < 1).
G is a d x m matrix that is zero off the shared leading diagonal; its
Hilbert-Schmidt norm is the Euclidean norm of the diagonal vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

__all__ = [
    "DriftSpec",
    "DiffusionSpec",
    "ModelSpec",
    "HypothesisReport",
    "saturate",
    "semigroup_apply",
    "eval_drift",
    "eval_diffusion",
    "drift_forcing",
    "diffusion_modulation",
    "check_hypotheses",
]


def saturate(x):
    """Componentwise saturation s(u) = u / (1 + |u|).

    Exactly 1-Lipschitz, bounded by 1, with s(0) = 0.
    """
    x = np.asarray(x, dtype=float)
    return x / (1.0 + np.abs(x))


@dataclass
class DriftSpec:
    """Drift catalog entry: constant + quasi-periodic forcing + saturation.

    ``modes`` is a list of (amplitude vector, frequency, phase) triples;
    ``nonlinearity_gain`` is the gain c >= 0 on the saturation term and is
    the exact Lipschitz constant of x -> F(t, x), uniformly in t.
    """

    base: np.ndarray
    modes: list[tuple[np.ndarray, float, float]] = field(default_factory=list)
    nonlinearity_gain: float = 0.0

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.modes = [
            (np.asarray(a, dtype=float), float(w), float(ph)) for a, w, ph in self.modes
        ]
        self.nonlinearity_gain = float(self.nonlinearity_gain)


@dataclass
class DiffusionSpec:
    """Diffusion catalog entry: modulated diagonal + state-dependent term.

    ``modes`` is a list of (alpha, frequency, phase) scalar triples with
    sum |alpha_j| < 1 so the modulation never changes sign;
    ``state_gain`` is gamma >= 0, the exact Lipschitz constant of
    x -> G(t, x) in Hilbert-Schmidt norm, uniformly in t.
    """

    base_sigma: np.ndarray
    modes: list[tuple[float, float, float]] = field(default_factory=list)
    state_gain: float = 0.0

    def __post_init__(self):
        self.base_sigma = np.asarray(self.base_sigma, dtype=float)
        self.modes = [(float(al), float(w), float(ph)) for al, w, ph in self.modes]
        self.state_gain = float(self.state_gain)


@dataclass
class ModelSpec:
    """Truncated Hilbert-space SDE model (generator, noise covariance, catalog)."""

    dim_state: int
    dim_noise: int
    spectrum: np.ndarray
    q_eigenvalues: np.ndarray
    drift: DriftSpec
    diffusion: DiffusionSpec

    def __post_init__(self):
        self.spectrum = np.asarray(self.spectrum, dtype=float)
        self.q_eigenvalues = np.asarray(self.q_eigenvalues, dtype=float)

    @property
    def shared_dim(self) -> int:
        """Number of state coordinates directly driven by noise."""
        return min(self.dim_state, self.dim_noise)

    def validate(self) -> None:
        """Raise ModelError when any catalog invariant is violated."""
        if self.dim_state < 1:
            raise ModelError("dim_state must be a positive integer")
        if self.dim_noise < 1:
            raise ModelError("dim_noise must be a positive integer")
        if self.spectrum.shape != (self.dim_state,):
            raise ModelError(
                f"spectrum must have length dim_state={self.dim_state}, "
                f"got shape {self.spectrum.shape}"
            )
        if not np.all(self.spectrum > 0.0):
            raise ModelError("spectrum entries must all be > 0")
        if self.q_eigenvalues.shape != (self.dim_noise,):
            raise ModelError(
                f"q_eigenvalues must have length dim_noise={self.dim_noise}, "
                f"got shape {self.q_eigenvalues.shape}"
            )
        if not np.all(self.q_eigenvalues >= 0.0):
            raise ModelError("q_eigenvalues must be nonnegative")
        if self.drift.base.shape != (self.dim_state,):
            raise ModelError("drift base must have length dim_state")
        for j, (amp, _, _) in enumerate(self.drift.modes):
            if amp.shape != (self.dim_state,):
                raise ModelError(f"drift mode {j}: amplitude must have length dim_state")
        if self.drift.nonlinearity_gain < 0.0:
            raise ModelError("drift nonlinearity_gain must be >= 0")
        if self.diffusion.base_sigma.shape != (self.dim_noise,):
            raise ModelError("diffusion base_sigma must have length dim_noise")
        if np.any(self.diffusion.base_sigma < 0.0):
            raise ModelError("diffusion base_sigma entries must be >= 0")
        if self.diffusion.state_gain < 0.0:
            raise ModelError("diffusion state_gain must be >= 0")
        alpha_sum = sum(abs(al) for al, _, _ in self.diffusion.modes)
        if alpha_sum >= 1.0:
            raise ModelError(
                f"sum of |alpha_j| over diffusion modes is {alpha_sum:.6g}, must be < 1"
            )


@dataclass
class HypothesisReport:
    """Closed-form solvability constants for a catalog model.

    kappa = 2 * lipschitz^2 * (1 + 1/(2*delta)); the bounded-solution solve
    is available exactly when kappa < 1.
    """

    delta: float
    lipschitz: float
    growth: float
    kappa: float
    contraction_ok: bool

    def as_text(self) -> str:
        lines = [
            f"delta={self.delta:.17g}",
            f"lipschitz={self.lipschitz:.17g}",
            f"growth={self.growth:.17g}",
            f"kappa={self.kappa:.17g}",
            f"contraction_ok={'true' if self.contraction_ok else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def semigroup_apply(spectrum, t: float, x):
    """Apply the diagonal semigroup: (S(t) x)_i = exp(-lambda_i t) * x_i.

    Requires t >= 0.  ||S(t) x|| <= exp(-delta t) ||x|| with
    delta = min_i lambda_i.
    """
    if t < 0.0:
        raise ValueError(f"semigroup_apply requires t >= 0, got t={t}")
    spectrum = np.asarray(spectrum, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.exp(-spectrum * t) * x


def eval_drift(model: ModelSpec, t: float, x):
    """Evaluate F(t, x); broadcasts over leading axes of x (shape (..., d))."""
    x = np.asarray(x, dtype=float)
    out = np.broadcast_to(model.drift.base, x.shape).copy()
    for amp, w, ph in model.drift.modes:
        out += math.cos(w * t + ph) * amp
    c = model.drift.nonlinearity_gain
    if c != 0.0:
        out += c * saturate(x)
    return out


def diffusion_modulation(model: ModelSpec, times):
    """Scalar modulation 1 + sum_j alpha_j cos(w_j t + phi_j), vectorized in t."""
    times = np.asarray(times, dtype=float)
    mod = np.ones_like(times)
    for al, w, ph in model.diffusion.modes:
        mod += al * np.cos(w * times + ph)
    return mod


def eval_diffusion(model: ModelSpec, t: float, x):
    """Evaluate the shared-diagonal of G(t, x), shape (..., min(d, m)).

    The full operator is the d x m matrix carrying these entries on its
    leading diagonal and zeros elsewhere; its Hilbert-Schmidt norm is the
    Euclidean norm of the returned vector.
    """
    x = np.asarray(x, dtype=float)
    k = model.shared_dim
    sigma_t = model.diffusion.base_sigma[:k] * float(diffusion_modulation(model, t))
    gamma = model.diffusion.state_gain
    out = np.broadcast_to(sigma_t, x.shape[:-1] + (k,)).copy()
    if gamma != 0.0:
        out += gamma * saturate(x[..., :k])
    return out


def drift_forcing(model: ModelSpec, times):
    """Deterministic forcing table b + sum_j a_j cos(w_j t + phi_j), shape (N, d)."""
    times = np.asarray(times, dtype=float)
    out = np.tile(model.drift.base, (times.shape[0], 1))
    for amp, w, ph in model.drift.modes:
        out += np.cos(w * times + ph)[:, None] * amp[None, :]
    return out


def check_hypotheses(model: ModelSpec) -> HypothesisReport:
    """Validate the model and compute its solvability constants exactly.

    delta = min_i lambda_i, lipschitz = c + gamma, growth K is the smallest
    catalog constant with ||F|| + ||G||_HS <= K (1 + ||x||), and
    kappa = 2 * lipschitz^2 * (1 + 1/(2 delta)).
    """
    model.validate()
    delta = float(np.min(model.spectrum))
    c = model.drift.nonlinearity_gain
    gamma = model.diffusion.state_gain
    lipschitz = c + gamma

    k = model.shared_dim
    alpha_sum = sum(abs(al) for al, _, _ in model.diffusion.modes)
    forcing_sup = float(np.linalg.norm(model.drift.base)) + sum(
        float(np.linalg.norm(amp)) for amp, _, _ in model.drift.modes
    )
    sigma_sup = float(np.linalg.norm(model.diffusion.base_sigma[:k])) * (1.0 + alpha_sum)
    growth = max(forcing_sup + sigma_sup, lipschitz)

    kappa = 2.0 * lipschitz**2 * (1.0 + 1.0 / (2.0 * delta))
    return HypothesisReport(
        delta=delta,
        lipschitz=lipschitz,
        growth=growth,
        kappa=kappa,
        contraction_ok=bool(kappa < 1.0),
    )
