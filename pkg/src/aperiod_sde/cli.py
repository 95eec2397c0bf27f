"""Config-driven command-line front end.

Commands: check | solve | scan | distribution | counterexample.  Each takes
``--config <path>``, ``--out <dir>``, optional ``--seed`` override and
``--threads N`` (env APERIOD_SDE_THREADS as fallback); results are
invariant to the thread count.  Exit status: 0 on success / positive
verdict, 1 on negative verdict or non-convergence, 2 on invalid input.

Outputs are CSV files and key=value text reports, written with fixed
17-significant-digit decimal formatting and '\\n' line endings so reruns
with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analysis import (
    continuity_in_probability,
    distributional_profile,
    scan_almost_periods,
    shift_distance_profile,
    uniform_integrability_check,
    modulus_tightness,
    tightness_check,
)
from .budget import error_budget, measure_scheme_error
from .config import RunConfig, load_config
from .controls import (
    common_lattice_period,
    stepanov_shift_distance,
    ursell_ensemble,
    ursell_grid,
    verify_not_appd,
    witness_report,
)
from .errors import (
    AperiodError,
    ConfigError,
    ContractionError,
    DivergenceError,
)
from .model import check_hypotheses
from .noise import sample_ensemble
from .solver import solve_bounded, write_path_csv

__all__ = ["main", "entrypoint"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _ensemble(cfg: RunConfig):
    return sample_ensemble(cfg.grid, cfg.model.q_eigenvalues, cfg.n_paths, cfg.seed)


def _budget(cfg: RunConfig, solution):
    scheme = measure_scheme_error(
        cfg.model,
        cfg.grid,
        seed=cfg.seed + 1,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        n_probe=min(cfg.n_paths, 128),
    )
    return error_budget(cfg.model, solution, cfg.burn_in, cfg.n_paths, cfg.tol, scheme)


def cmd_check(cfg: RunConfig, out: Path, threads: int) -> int:
    report = check_hypotheses(cfg.model)
    verdict = "OK" if report.contraction_ok else "NOT CONTRACTIVE"
    print(
        f"delta={report.delta:.6g} lipschitz={report.lipschitz:.6g} "
        f"growth={report.growth:.6g} kappa={report.kappa:.6g} {verdict}"
    )
    _write_text(out / "hypotheses.txt", report.as_text())
    return 0 if report.contraction_ok else 1


def cmd_solve(cfg: RunConfig, out: Path, threads: int) -> int:
    noise = _ensemble(cfg)
    solution, conv = solve_bounded(cfg.model, noise, tol=cfg.tol, max_iter=cfg.max_iter)
    budget = _budget(cfg, solution)
    write_path_csv(solution, out / "solution.csv")
    _write_text(out / "convergence.txt", conv.as_text() + budget.as_text())
    print(
        f"iterations={conv.iterations} converged={conv.converged} "
        f"last_delta={conv.deltas[-1]:.6g}"
    )
    return 0 if conv.converged else 1


def cmd_scan(cfg: RunConfig, out: Path, threads: int) -> int:
    taus = cfg.tau_grid
    if taus.size == 0:
        raise ConfigError("tau range is empty", "scan")
    noise = _ensemble(cfg)
    d0_vals, lp_vals, base, conv = shift_distance_profile(
        cfg.model,
        noise,
        taus,
        cfg.eval_times,
        p=cfg.p_mean,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        threads=threads,
    )
    budget = _budget(cfg, base)
    accept_cols = [(d0_vals <= eps).astype(float) for eps in cfg.epsilons]
    header = "tau,coupled_d0,coupled_pmean" + "".join(
        f",accepted_eps{j + 1}" for j in range(len(accept_cols))
    )
    _write_csv(out / "scan.csv", header, zip(taus, d0_vals, lp_vals, *accept_cols))
    cont_gap, cont_rate = continuity_in_probability(base, cfg.eval_times)
    lines = [budget.as_text()]
    lines.append(f"continuity_d0_max={_fmt(cont_gap)}\n")
    lines.append(f"continuity_d0_rate={_fmt(cont_rate)}\n")
    all_dense = True
    for eps in cfg.epsilons:
        report = scan_almost_periods((taus, d0_vals), eps, cfg.l_max)
        all_dense = all_dense and report.relatively_dense
        lines.append(f"l_max={_fmt(cfg.l_max)}\n" + report.as_text())
    _write_text(out / "report.txt", "".join(lines))
    print(f"scanned {taus.size} shifts; relatively_dense={all_dense}")
    return 0 if all_dense else 1


def cmd_distribution(cfg: RunConfig, out: Path, threads: int) -> int:
    taus = cfg.tau_grid
    if taus.size == 0:
        raise ConfigError("tau range is empty", "scan")
    t0 = float(cfg.eval_times[0])
    t_tuple = [t0 + off for off in cfg.apfd_offsets]
    window = (t0 + cfg.appd_window[0], t0 + cfg.appd_window[1])
    horizon = max([t0] + t_tuple + [window[1]]) + cfg.tau_stop
    if horizon > cfg.grid.t_end + 1e-9:
        raise ConfigError(
            f"shifted windows reach t={horizon:.6g}, past the grid end "
            f"{cfg.grid.t_end:.6g}; enlarge n_steps or shrink the tau range",
            "scan.tau_stop",
        )
    noise = _ensemble(cfg)
    base, conv = solve_bounded(cfg.model, noise, tol=cfg.tol, max_iter=cfg.max_iter)
    budget = _budget(cfg, base)

    all_dense = True
    lines = [budget.as_text()]
    profiles = {
        "apod": distributional_profile(base, "apod", taus, cfg.epsilons, cfg.l_max, t=t0),
        "apfd": distributional_profile(
            base, "apfd", taus, cfg.epsilons, cfg.l_max, t_tuple=t_tuple
        ),
        "appd": distributional_profile(
            base, "appd", taus, cfg.epsilons, cfg.l_max, window=window
        ),
    }
    for mode, profile in profiles.items():
        _write_csv(out / f"{mode}.csv", "tau,distance", zip(profile.taus, profile.values))
        for eps, report in profile.epsilon_reports.items():
            all_dense = all_dense and report.relatively_dense
            lines.append(f"mode={mode}\n" + report.as_text())

    if cfg.tightness_deltas:
        rows = [
            (dlt, modulus_tightness(base, (0.0, cfg.appd_window[1] - cfg.appd_window[0]), dlt))
            for dlt in cfg.tightness_deltas
        ]
        _write_csv(out / "tightness.csv", "delta,modulus", rows)
    if cfg.ui_thresholds:
        ui = uniform_integrability_check(base, cfg.ui_p, cfg.ui_thresholds)
        _write_csv(out / "ui.csv", "threshold,tail_moment", zip(ui.thresholds, ui.values))
    for eps in cfg.epsilons:
        lines.append(f"tightness_radius_eps_{_fmt(eps)}={_fmt(tightness_check(base, eps))}\n")
    _write_text(out / "report.txt", "".join(lines))
    print(f"distribution profiles over {taus.size} shifts; relatively_dense={all_dense}")
    return 0 if all_dense else 1


def cmd_counterexample(cfg: RunConfig, out: Path, threads: int) -> int:
    if cfg.ursell is None:
        raise ConfigError("missing required section", "ursell")
    spec = cfg.ursell
    dt = cfg.ursell_dt if cfg.ursell_dt is not None else spec.resolution_dt
    problems = witness_report(spec, cfg.ursell_delta, dt)
    if problems:
        raise ConfigError("; ".join(problems), "ursell")
    grid = ursell_grid(spec, dt=dt)
    ensemble = ursell_ensemble(spec, grid, cfg.ursell_n_paths, cfg.seed)
    write_path_csv(ensemble, out / "ursell.csv")
    tau = common_lattice_period(spec)
    stepanov = stepanov_shift_distance(spec, tau)
    witness = verify_not_appd(
        spec, cfg.ursell_delta, n_paths=cfg.ursell_n_paths, seed=cfg.seed, dt=grid.dt
    )
    text = (
        f"coupled_stepanov_distance_at_tau_{_fmt(tau)}={_fmt(stepanov)}\n"
        f"not_appd_witness={_fmt(witness)}\n"
    )
    _write_text(out / "verdict.txt", text)
    print(text, end="")
    separated = stepanov <= cfg.stepanov_max and witness >= cfg.witness_min
    return 0 if separated else 1


_COMMANDS = {
    "check": cmd_check,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "distribution": cmd_distribution,
    "counterexample": cmd_counterexample,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="aperiod-sde",
        description="Shift-coupled SDE simulation and almost-periodicity diagnostics",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="INI run configuration")
    parser.add_argument("--out", default=".", help="output directory (created if absent)")
    parser.add_argument("--seed", type=int, default=None, help="override [ensemble] seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: APERIOD_SDE_THREADS or 1); results invariant to N",
    )
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("APERIOD_SDE_THREADS", "1"))
    threads = max(threads, 1)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, threads)
    except (ContractionError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AperiodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
