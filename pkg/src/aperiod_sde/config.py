"""Flat INI run configuration.

Sections: [model], [grid], [ensemble], [solver], [scan], [analysis],
[ursell], [output].  All values are decimal text; vectors are
whitespace-separated; drift/diffusion modes use numbered keys
(``drift_mode_1 = freq phase amp_1 .. amp_d`` and
``diffusion_mode_1 = alpha freq phase``).  Parsing failures name the
offending section and key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .controls import UrsellSpec
from .errors import ConfigError
from .model import DiffusionSpec, DriftSpec, ModelSpec
from .noise import TimeGrid

__all__ = ["RunConfig", "load_config"]


@dataclass
class RunConfig:
    model: ModelSpec
    grid: TimeGrid
    burn_in: float
    eval_times: np.ndarray
    n_paths: int
    seed: int
    tol: float
    max_iter: int
    # scan
    tau_start: float
    tau_stop: float
    tau_step: float
    epsilons: list[float]
    l_max: float
    p_mean: float
    # analysis
    apfd_offsets: list[float]
    appd_window: tuple[float, float]
    tightness_deltas: list[float]
    ui_p: float
    ui_thresholds: list[float]
    # counterexample
    ursell: UrsellSpec | None
    ursell_delta: float
    ursell_dt: float | None
    ursell_n_paths: int
    stepanov_max: float
    witness_min: float
    verbosity: str = "normal"

    @property
    def tau_grid(self) -> np.ndarray:
        n = int(round((self.tau_stop - self.tau_start) / self.tau_step))
        return self.tau_start + self.tau_step * np.arange(n + 1)


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def _raw(self, section: str, key: str, default=None) -> str:
        if not self.parser.has_option(section, key):
            if default is None:
                raise ConfigError("missing required key", f"{section}.{key}")
            return default
        return self.parser.get(section, key)

    def floatv(self, section: str, key: str, default=None) -> float:
        raw = self._raw(section, key, default)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"not a decimal number: {raw!r}", f"{section}.{key}") from exc

    def intv(self, section: str, key: str, default=None) -> int:
        raw = self._raw(section, key, default)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"not an integer: {raw!r}", f"{section}.{key}") from exc

    def vector(self, section: str, key: str, default=None) -> np.ndarray:
        raw = self._raw(section, key, default)
        try:
            return np.array([float(tok) for tok in raw.split()], dtype=float)
        except ValueError as exc:
            raise ConfigError(f"not a decimal vector: {raw!r}", f"{section}.{key}") from exc

    def text(self, section: str, key: str, default=None) -> str:
        return self._raw(section, key, default)

    def numbered(self, section: str, prefix: str) -> list[np.ndarray]:
        """Collect prefix_1, prefix_2, ... in index order."""
        out = []
        i = 1
        while self.parser.has_option(section, f"{prefix}_{i}"):
            out.append(self.vector(section, f"{prefix}_{i}"))
            i += 1
        return out


def _parse_model(r: _Reader) -> ModelSpec:
    d = r.intv("model", "dim_state")
    m = r.intv("model", "dim_noise")
    spectrum = r.vector("model", "spectrum")
    q = r.vector("model", "q")
    drift_base = r.vector("model", "drift_base", default=" ".join(["0"] * max(d, 1)))
    drift_gain = r.floatv("model", "drift_gain", default="0")
    drift_modes = []
    for i, row in enumerate(r.numbered("model", "drift_mode"), start=1):
        if row.size != 2 + d:
            raise ConfigError(
                f"drift mode needs freq phase + {d} amplitudes, got {row.size} values",
                f"model.drift_mode_{i}",
            )
        drift_modes.append((row[2:], float(row[0]), float(row[1])))
    diff_base = r.vector("model", "diffusion_base", default=" ".join(["0"] * max(m, 1)))
    diff_gain = r.floatv("model", "diffusion_gain", default="0")
    diff_modes = []
    for i, row in enumerate(r.numbered("model", "diffusion_mode"), start=1):
        if row.size != 3:
            raise ConfigError(
                f"diffusion mode needs alpha freq phase, got {row.size} values",
                f"model.diffusion_mode_{i}",
            )
        diff_modes.append((float(row[0]), float(row[1]), float(row[2])))
    return ModelSpec(
        dim_state=d,
        dim_noise=m,
        spectrum=spectrum,
        q_eigenvalues=q,
        drift=DriftSpec(base=drift_base, modes=drift_modes, nonlinearity_gain=drift_gain),
        diffusion=DiffusionSpec(base_sigma=diff_base, modes=diff_modes, state_gain=diff_gain),
    )


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    r = _Reader(parser)
    for section in ("model", "grid", "ensemble"):
        if not parser.has_section(section):
            raise ConfigError("missing required section", section)

    model = _parse_model(r)

    t_start = r.floatv("grid", "t_start")
    dt = r.floatv("grid", "dt")
    n_steps = r.intv("grid", "n_steps")
    try:
        grid = TimeGrid(t_start, dt, n_steps)
    except Exception as exc:
        raise ConfigError(str(exc), "grid") from exc
    burn_in = r.floatv("grid", "burn_in", default="0")
    eval_start = r.floatv("grid", "eval_start", default=f"{t_start + burn_in}")
    eval_stop = r.floatv("grid", "eval_stop", default=f"{grid.t_end}")
    eval_step = r.floatv("grid", "eval_step", default=f"{dt}")
    if eval_start < t_start + burn_in - 1e-9 * max(dt, 1.0):
        raise ConfigError(
            f"eval window must start inside the post-burn-in region "
            f"(eval_start={eval_start} < t_start + burn_in = {t_start + burn_in})",
            "grid.eval_start",
        )
    if eval_stop > grid.t_end + 1e-9 * max(dt, 1.0):
        raise ConfigError("eval window extends past the grid end", "grid.eval_stop")
    if eval_step <= 0 or eval_stop < eval_start:
        raise ConfigError("eval window is empty", "grid.eval_step")
    n_eval = int(round((eval_stop - eval_start) / eval_step))
    eval_times = eval_start + eval_step * np.arange(n_eval + 1)

    n_paths = r.intv("ensemble", "n_paths")
    seed = r.intv("ensemble", "seed")
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1", "ensemble.n_paths")

    tol = r.floatv("solver", "tol", default="1e-4")
    max_iter = r.intv("solver", "max_iter", default="60")

    tau_start = r.floatv("scan", "tau_start", default="0")
    tau_stop = r.floatv("scan", "tau_stop", default="0")
    tau_step = r.floatv("scan", "tau_step", default=f"{dt}")
    if parser.has_section("scan"):
        if tau_stop < tau_start or tau_step <= 0:
            raise ConfigError("tau range is empty", "scan.tau_stop")
        ratio = tau_step / dt
        if abs(ratio - round(ratio)) > 1e-6:
            raise ConfigError(
                f"tau_step={tau_step} must be an integer multiple of dt={dt}",
                "scan.tau_step",
            )
    epsilons = [float(e) for e in r.vector("scan", "epsilons", default="")]
    l_max = r.floatv("scan", "l_max", default="inf")
    p_mean = r.floatv("scan", "p", default="2")

    apfd_offsets = [float(x) for x in r.vector("analysis", "apfd_offsets", default="0 0.5 1")]
    appd_vec = r.vector("analysis", "appd_window", default="0 1")
    if appd_vec.size != 2:
        raise ConfigError("appd_window needs exactly two values", "analysis.appd_window")
    tightness_deltas = [float(x) for x in r.vector("analysis", "tightness_deltas", default="")]
    ui_p = r.floatv("analysis", "ui_p", default="2")
    ui_thresholds = [float(x) for x in r.vector("analysis", "ui_thresholds", default="")]

    ursell = None
    ursell_delta = 0.1
    ursell_dt = None
    ursell_n_paths = 64
    stepanov_max = 0.1
    witness_min = 0.9
    if parser.has_section("ursell"):
        eps = r.vector("ursell", "eps")
        n_max = r.intv("ursell", "n_max", default=str(eps.size))
        ursell = UrsellSpec(eps_seq=eps, n_max=n_max)
        ursell_delta = r.floatv("ursell", "delta", default="0.1")
        if parser.has_option("ursell", "dt"):
            ursell_dt = r.floatv("ursell", "dt")
        ursell_n_paths = r.intv("ursell", "n_paths", default="64")
        stepanov_max = r.floatv("ursell", "stepanov_max", default="0.1")
        witness_min = r.floatv("ursell", "witness_min", default="0.9")

    verbosity = r.text("output", "verbosity", default="normal")

    return RunConfig(
        model=model,
        grid=grid,
        burn_in=burn_in,
        eval_times=eval_times,
        n_paths=n_paths,
        seed=seed,
        tol=tol,
        max_iter=max_iter,
        tau_start=tau_start,
        tau_stop=tau_stop,
        tau_step=tau_step,
        epsilons=epsilons,
        l_max=l_max,
        p_mean=p_mean,
        apfd_offsets=apfd_offsets,
        appd_window=(float(appd_vec[0]), float(appd_vec[1])),
        tightness_deltas=tightness_deltas,
        ui_p=ui_p,
        ui_thresholds=ui_thresholds,
        ursell=ursell,
        ursell_delta=ursell_delta,
        ursell_dt=ursell_dt,
        ursell_n_paths=ursell_n_paths,
        stepanov_max=stepanov_max,
        witness_min=witness_min,
        verbosity=verbosity,
    )
