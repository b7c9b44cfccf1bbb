"""Dispatch an ExperimentConfig to its computation and persist the RunRecord."""
from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np

from ..dynamics import Trajectory, _flow, dump_trajectory
from ..estimates import fit_loglog, mean_estimate
from ..gaussian import map_batches, tail_mass_estimate
from ..qi import (
    ExponentSchedule,
    QiKernel,
    admissible_params,
    exponent_schedule,
    integrability_exponent,
    qi_halfcase_ratio,
    qi_second_moment_exact,
)
from ..rng import Stream
from ..spectral import _energy_sq
from .config import ExperimentConfig, OutputError, UnknownKindError
from .experiments import (
    TAG_BALL,
    TAG_COV,
    TAG_DENSITY,
    TAG_EXP,
    ball_mass_mc,
    change_of_variables_test,
    density_lp_norm_mc,
    exp_moment_mc,
)
from .records import DENSITY_CSV_COLUMNS, QI_CSV_COLUMNS, RunRecord, append_record, write_csv
from .validate import run_checks

TAG_SIMULATE = 5
TAG_TAIL = 6


def _simulate(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    spec, params = cfg.gaussian_spec(), cfg.flow_params()
    stream = Stream(cfg.seed, TAG_SIMULATE)

    def drift(c):
        e0 = np.sqrt(_energy_sq(c))
        _, traj = _flow(c, cfg.t, params, observe=lambda x: np.sqrt(_energy_sq(x)))
        return np.max(np.abs(traj.values - e0) / e0, axis=0)

    drifts = map_batches(spec, stream, cfg.samples, drift, threads)
    est = mean_estimate(drifts)
    rec.add_estimate("rel_energy_drift", est.value, est.stderr, samples=est.samples)
    rec.exact["max_rel_energy_drift"] = float(np.max(drifts))
    if cfg.trajectory_out:
        from ..gaussian import sample_batch

        c0 = sample_batch(spec, stream, 0, 1)[0]
        _, traj = _flow(c0, cfg.t, params, observe=lambda x: x.copy())
        try:
            dump_trajectory(cfg.trajectory_out, Trajectory(traj.times, traj.values))
        except OSError as exc:
            raise OutputError(f"cannot write trajectory to {cfg.trajectory_out}: {exc}") from exc


def _qi_scan(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> list[dict]:
    values = [qi_second_moment_exact(QiKernel(cfg.variant, cfg.s, N), cfg.t) for N in cfg.N_list]
    slope = resid = math.nan
    if len(cfg.N_list) >= 2 and cfg.t != 0:
        slope, _, resid = fit_loglog(cfg.N_list, np.asarray(values) / cfg.t**2)
    rec.exact.update(
        {"N_list": list(cfg.N_list), "qi_values": values, "variant": cfg.variant, "fit_slope": slope, "fit_residual": resid}
    )
    if cfg.s == 0.5 and cfg.t != 0 and len(cfg.N_list) >= 2:
        half = qi_halfcase_ratio(cfg.t, cfg.N_list, cfg.variant)
        rec.exact["log_squared_ratios"] = list(half.ratios)
    return [
        {"s": cfg.s, "N": N, "t": cfg.t, "variant": cfg.variant, "qi_value": v, "fit_slope": slope, "fit_residual": resid}
        for N, v in zip(cfg.N_list, values)
    ]


def _density(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> list[dict]:
    spec, params = cfg.gaussian_spec(), cfg.flow_params()
    ball = ball_mass_mc(spec, cfg.R, cfg.samples, Stream(cfg.seed, TAG_BALL), threads)
    rec.add_estimate("ball_mass", ball.value, ball.stderr, samples=ball.samples)
    rows = []
    for t in cfg.t_list:
        est = density_lp_norm_mc(
            spec, t, cfg.p, cfg.R, params, cfg.samples, Stream(cfg.seed, TAG_DENSITY), cfg.orientation, threads
        )
        rec.add_estimate(f"lp_norm[t={t}]", est.value, est.stderr, samples=est.samples)
        rows.append(
            {"s": cfg.s, "N": cfg.N, "t": t, "p": cfg.p, "R": cfg.R, "estimate": est.value, "stderr": est.stderr,
             "ptR": cfg.p * abs(t) * cfg.R}
        )
    rec.exact["cells"] = rows
    rec.exact["window"] = {"c0": cfg.c0, "max_ptR": max(r["ptR"] for r in rows), "within": all(r["ptR"] <= cfg.c0 for r in rows)}
    return rows


def _exp_moment(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    res = exp_moment_mc(cfg.gaussian_spec(), cfg.lam, cfg.R, cfg.samples, Stream(cfg.seed, TAG_EXP), threads)
    rec.add_estimate("exp_moment", res.value, res.stderr, samples=res.samples)
    rec.exact.update({"max_abs_q": res.max_abs_q, "censored": res.censored})


def _exponents(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    p_min, tau = admissible_params(cfg.r1, cfg.c0, cfg.R, cfg.p)
    sched = ExponentSchedule(cfg.p, cfg.r1, tau)
    rec.exact.update(
        {
            "p_min": p_min,
            "tau_R": tau,
            "r_j": [exponent_schedule(sched, j) for j in range(1, cfg.j_max + 1)],
            "q_t": {str(t): integrability_exponent(sched, t) for t in cfg.t_list if t >= 0},
        }
    )


def _validate(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    checks = run_checks(cfg.seed)
    rec.exact["checks"] = checks
    if not all(c["passed"] for c in checks.values()):
        rec.status = "failed"


def _change_of_variables(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    rep = change_of_variables_test(
        cfg.gaussian_spec(), cfg.t, cfg.R, cfg.flow_params(), cfg.samples, cfg.functionals,
        Stream(cfg.seed, TAG_COV), threads,
    )
    for r in rep.results:
        rec.add_estimate(f"discrepancy[o={r.orientation},F={r.functional}]", r.diff, r.stderr)
    rec.exact["change_of_variables"] = rep.to_dict()
    if rep.status != "resolved":
        rec.status = rep.status


def _tail_mass(cfg: ExperimentConfig, rec: RunRecord, threads: int) -> None:
    logs = []
    for Ncut in cfg.Ncut_list:
        est = tail_mass_estimate(cfg.s, Ncut, cfg.M, cfg.samples, Stream(cfg.seed, TAG_TAIL), method=cfg.tail_method)
        rec.add_estimate(f"tail_mass[Ncut={Ncut}]", est.value, est.stderr, log_value=est.log_value,
                         log_stderr=est.log_stderr, hits=est.hits)
        logs.append(est.log_value)
    slope = math.nan
    if len(logs) >= 2 and all(math.isfinite(x) for x in logs):
        # fit on log P itself: P underflows double precision at moderate cutoffs
        slope = float(np.polyfit(np.log(cfg.Ncut_list), logs, 1)[0])
    rec.exact.update({"Ncut_list": list(cfg.Ncut_list), "log_values": logs, "fit_slope": slope})


_DISPATCH = {
    "simulate": _simulate,
    "qi-scan": _qi_scan,
    "density": _density,
    "exp-moment": _exp_moment,
    "exponents": _exponents,
    "validate": _validate,
    "change-of-variables": _change_of_variables,
    "tail-mass": _tail_mass,
}


def run_experiment(
    cfg: ExperimentConfig, threads: int = 1, write: bool = True, plot: str | None = None
) -> RunRecord:
    if cfg.kind not in _DISPATCH:
        raise UnknownKindError(f"unknown experiment kind {cfg.kind!r}")
    out = Path(cfg.output)
    if write and out.parent and not out.parent.exists():
        raise OutputError(f"output directory {out.parent} does not exist")
    rec = RunRecord(config=cfg.to_dict(), seed=cfg.seed)
    start = time.perf_counter()
    rows = _DISPATCH[cfg.kind](cfg, rec, threads)
    rec.timings["total_s"] = time.perf_counter() - start
    if write:
        append_record(out, rec)
        if rows:
            columns = QI_CSV_COLUMNS if cfg.kind == "qi-scan" else DENSITY_CSV_COLUMNS
            write_csv(out.with_suffix(".csv"), columns, rows)
    if plot:
        from .plots import plot_records

        plot_records([rec], plot)
    return rec
