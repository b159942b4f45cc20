"""Experiment orchestration: figure data, result tables, sweeps and the verification suite."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import ConvergenceError
from .freegauss import free_gaussian
from .model import (
    momentum_wavefunction_initial,
    reflected_overlap_term,
    reflection_amplitude,
    transmission_amplitude,
)
from .propagator import PostSelection, evaluate_in_time, gaussian_mass
from .sdapprox import (
    SDConfig,
    sd_distribution,
    sd_energy_mean,
    sd_energy_variance,
    sd_inverse_momentum,
    sd_mean_momentum,
    sd_norm,
    sd_time_variance,
    sd_uncertainty_product,
    sd_weak_momentum,
)
from .tptd import TPTDistribution, arrival_time_momentum, build_distribution
from .weakvals import (
    log_density_momentum,
    spatial_average_check,
    uncertainty_report,
    weak_energy_by_time_derivative,
    weak_value_series,
)

log = logging.getLogger(__name__)

DRIFT_TOLERANCE = 1e-8
SD_CUTOFF_NOTE = "steepest-descent time integrals truncated at the exact distribution's t_max"


def _sd_config(cfg: ExperimentConfig) -> SDConfig:
    s = cfg.scenario
    return SDConfig(s.state, s.barrier, s.params, cfg.x)


def _doubled(cfg: ExperimentConfig) -> ExperimentConfig:
    return replace(cfg, scenario=replace(cfg.scenario, controls=cfg.scenario.controls.doubled()))


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def truncation_header(dist: TPTDistribution) -> dict:
    return {
        "t_max": dist.grid.t_max,
        "time_samples": dist.grid.samples,
        "tail_mass": dist.tail_mass_estimate,
        "tail_loglog_slope": dist.tail_slope,
        "normalization": dist.normalization,
        "momentum_nodes": len(dist.momentum_grid),
        "grid_diagnostics": list(dist.diagnostics),
    }


def write_csv(path: Path, header: dict, columns: list[str], rows) -> Path:
    """CSV with a '# key: value' metadata block; numbers printed round-trip exact."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {v if isinstance(v, str) else json.dumps(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of ``write_csv``: metadata dict, column names, data array."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition(": ")
                try:
                    meta[k] = json.loads(v)
                except json.JSONDecodeError:
                    meta[k] = v
            else:
                lines.append(line)
    columns = lines[0].strip().split(",")
    data = np.array([[float(v) for v in ln.strip().split(",")] for ln in lines[1:]])
    return meta, columns, data


def _base_header(cfg: ExperimentConfig, kind: str) -> dict:
    return {"artifact": kind, "config_hash": cfg.config_hash, "config": cfg.to_json()}


# -- figure data -------------------------------------------------------------


def fig1_data(cfg: ExperimentConfig):
    """Exact and Gaussian-estimate arrival-time densities on a shared grid."""
    dist = build_distribution(cfg.scenario, cfg.x)
    return dist, dist.times, dist.density, sd_distribution(_sd_config(cfg), dist.times)


def fig2_data(cfg: ExperimentConfig):
    """Deviations of the weak momentum from its mean, exact and steepest descent."""
    s = cfg.scenario
    dist = build_distribution(s, cfg.x)
    series = weak_value_series(s, dist)
    summary = uncertainty_report(series, dist, s.params.hbar)
    sd = sd_weak_momentum(_sd_config(cfg), dist.times)
    sd_mean = sd_mean_momentum(_sd_config(cfg))
    cols = np.column_stack(
        [
            dist.times,
            series.p_weak.real - summary.mean_p,
            sd.real - sd_mean,
            series.p_weak.imag,
            sd.imag,
        ]
    )
    return dist, series, summary, cols


def _drift_check(cfg, value_fn, label, resolution_check):
    if not resolution_check:
        return None
    cfg2 = _doubled(cfg)
    a, b = value_fn(cfg), value_fn(cfg2)
    drift = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    if drift >= DRIFT_TOLERANCE:
        raise ConvergenceError(f"{label}: doubled-resolution drift {drift:.3g} >= {DRIFT_TOLERANCE:g}")
    return drift


def cmd_fig1(cfg: ExperimentConfig, out_dir, *, resolution_check: bool = False) -> Path:
    dist, t, exact, approx = fig1_data(cfg)
    header = _base_header(cfg, "fig1")
    header.update(truncation_header(dist))
    header["sd_cutoff"] = SD_CUTOFF_NOTE
    drift = _drift_check(cfg, lambda c: np.array(_fig1_scalars(c)), "fig1", resolution_check)
    if drift is not None:
        header["resolution_drift"] = drift
    return write_csv(Path(out_dir) / f"{cfg.name}_fig1.csv", header, ["t", "P_exact", "P_SD"],
                     zip(t, exact, approx))


def _fig1_scalars(cfg):
    dist, t, exact, _ = fig1_data(cfg)
    return [dist.normalization, float(dist.integrate(t * exact)), float(dist.integrate(t * t * exact))]


def cmd_fig2(cfg: ExperimentConfig, out_dir, *, resolution_check: bool = False) -> Path:
    dist, series, summary, cols = fig2_data(cfg)
    header = _base_header(cfg, "fig2")
    header.update(truncation_header(dist))
    header["mean_weak_momentum"] = summary.mean_p
    header["sd_mean_momentum"] = sd_mean_momentum(_sd_config(cfg))
    header["masked_samples"] = int((~series.valid).sum())
    drift = _drift_check(
        cfg, lambda c: np.array([fig2_data(c)[2].mean_p, fig2_data(c)[2].var_p]), "fig2", resolution_check
    )
    if drift is not None:
        header["resolution_drift"] = drift
    columns = ["t", "Re_dpw_exact", "Re_dpw_SD", "Im_pw_exact", "Im_pw_SD"]
    return write_csv(Path(out_dir) / f"{cfg.name}_fig2.csv", header, columns, cols)


# -- result table --------------------------------------------------------------


@dataclass
class ResultRecord:
    config: dict
    config_hash: str
    summary: dict
    normalization: float
    arrival_momentum: float
    steepest_descent: dict
    diagnostics: dict
    resolution: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "summary": self.summary,
            "normalization": self.normalization,
            "arrival_momentum": self.arrival_momentum,
            "steepest_descent": self.steepest_descent,
            "diagnostics": self.diagnostics,
            "resolution": self.resolution,
            "timings": self.timings,
        }

    def scalars(self) -> dict:
        s = self.summary
        return {
            "mean_p": s["mean_p"],
            "std_p": s["std_p"],
            "mean_H": s["mean_H"],
            "var_H": s["var_H"],
            "mean_t": s["mean_t"],
            "var_t": s["var_t"],
            "commutator_im": s["commutator"][1],
            "product_second_moment": s["product_second_moment"],
            "product_stddev": s["product_stddev"],
            "bound_rhs": s["bound_rhs"],
            "normalization": self.normalization,
            "arrival_momentum": self.arrival_momentum,
        }


def _compute_record(cfg: ExperimentConfig) -> ResultRecord:
    s = cfg.scenario
    timings = {}
    t0 = time.perf_counter()
    dist = build_distribution(s, cfg.x)
    series = weak_value_series(s, dist)
    summary = uncertainty_report(series, dist, s.params.hbar)
    timings["moments_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    pbar = arrival_time_momentum(s, cfg.x)
    timings["arrival_momentum_s"] = time.perf_counter() - t0
    sdc = _sd_config(cfg)
    grid = dist.momentum_grid
    direct = np.abs(momentum_wavefunction_initial(s.state, grid.nodes, s.params))
    reflected = np.abs(reflected_overlap_term(s.state, s.barrier, s.params, grid.nodes))
    steepest = {
        "mean_momentum": sd_mean_momentum(sdc),
        "momentum_stddev": math.sqrt(s.params.hbar**2 * s.state.gamma / 2),
        "norm": sd_norm(sdc),
        "time_variance": sd_time_variance(sdc),
        "energy_mean": sd_energy_mean(sdc),
        "energy_variance": sd_energy_variance(sdc),
        "uncertainty_product": sd_uncertainty_product(sdc),
        "inverse_momentum": sd_inverse_momentum(sdc, dist.times),
        "cutoff": SD_CUTOFF_NOTE,
    }
    diagnostics = truncation_header(dist)
    diagnostics.update(
        {
            "far_field_parameter": s.state.far_field_parameter,
            "density_at_zero": dist.density_at_zero,
            "masked_mass": summary.masked_mass,
            "reflected_overlap_weight": float(np.sum(grid.weights * reflected**2) / np.sum(grid.weights * direct**2)),
            "imag_mean_p": summary.imag_mean_p,
        }
    )
    return ResultRecord(
        config=cfg.to_dict(),
        config_hash=cfg.config_hash,
        summary=summary.to_dict(),
        normalization=dist.normalization,
        arrival_momentum=pbar,
        steepest_descent=steepest,
        diagnostics=diagnostics,
        timings=timings,
    )


def compute_table(cfg: ExperimentConfig, *, resolution_check: bool = True) -> ResultRecord:
    """All reported scalars for one configuration, each paired with its doubled-resolution drift."""
    start = time.perf_counter()
    record = _compute_record(cfg)
    if resolution_check:
        fine = _compute_record(_doubled(cfg)).scalars()
        record.resolution = {
            k: {"value": v, "doubled": fine[k], "rel_drift": _rel(v, fine[k])} for k, v in record.scalars().items()
        }
    record.timings["total_s"] = time.perf_counter() - start
    return record


def max_drift(record: ResultRecord) -> float:
    return max((r["rel_drift"] for r in record.resolution.values()), default=0.0)


def cmd_table(cfg: ExperimentConfig, out_dir, *, resolution_check: bool = True, enforce: bool = False):
    record = compute_table(cfg, resolution_check=resolution_check)
    if enforce and max_drift(record) >= DRIFT_TOLERANCE:
        raise ConvergenceError(f"doubled-resolution drift {max_drift(record):.3g} >= {DRIFT_TOLERANCE:g}")
    path = Path(out_dir) / f"{cfg.name}_table.json"
    write_json(path, record.to_dict())
    return record, path


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def cmd_sweep(cfg: ExperimentConfig, gammas, out_dir, *, resolution_check: bool = True, enforce: bool = False):
    """One result record per width parameter, plus a summary CSV."""
    records = []
    for g in gammas:
        sub = cfg.with_gamma(g)
        rec = compute_table(sub, resolution_check=resolution_check)
        if enforce and max_drift(rec) >= DRIFT_TOLERANCE:
            raise ConvergenceError(f"gamma={g}: doubled-resolution drift {max_drift(rec):.3g}")
        records.append(rec)
    out = Path(out_dir)
    write_json(out / f"{cfg.name}_sweep.json", [r.to_dict() for r in records])
    header = _base_header(cfg, "sweep")
    header["gammas"] = list(gammas)
    header["t_max"] = [r.diagnostics["t_max"] for r in records]
    header["tail_mass"] = [r.diagnostics["tail_mass"] for r in records]
    cols = ["gamma", "mean_p", "std_p", "sd_std_p", "arrival_momentum", "var_t", "var_H", "variance_product"]
    rows = [
        (
            g,
            r.summary["mean_p"],
            r.summary["std_p"],
            r.steepest_descent["momentum_stddev"],
            r.arrival_momentum,
            r.summary["var_t"],
            r.summary["var_H"],
            r.summary["variance_product"],
        )
        for g, r in zip(gammas, records)
    ]
    csv_path = write_csv(out / f"{cfg.name}_sweep.csv", header, cols, rows)
    return records, csv_path


# -- verification suite ----------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} (tol {self.tolerance:.1e}) {self.detail}".rstrip()


def _check(name, value, tol, detail="", *, at_least=False):
    ok = value >= tol if at_least else value < tol
    return Check(name, bool(ok), float(value), float(tol), detail)


def free_particle_errors(cfg: ExperimentConfig, n_x: int = 10, n_t: int = 12) -> float:
    """Max relative error of the spectral evaluators against the free Gaussian on an (x, t) lattice."""
    free = cfg.free_particle()
    s = free.scenario
    dist = build_distribution(s, free.x)
    xi, pi_, M = s.state.x_center, s.state.p_incident, s.params.mass
    t_c = M * (free.x - xi) / pi_
    width = math.sqrt(1 / (2 * s.state.gamma))
    ts = np.linspace(0.0, 2 * t_c, n_t)
    worst = 0.0
    for t in ts:
        centre = xi + pi_ * t / M
        spread = width * math.sqrt(1 + (s.params.hbar * s.state.gamma * t / M) ** 2)
        xs = centre + spread * np.linspace(-3, 3, n_x)
        for x in xs:
            got = np.array(evaluate_in_time(PostSelection(x), t, dist.momentum_grid, s.state, s.barrier, s.params))
            ref = np.array(free_gaussian(s.state, s.params, x, t))
            peak = (s.state.gamma / math.pi) ** 0.25 / (1 + (s.params.hbar * s.state.gamma * t / M) ** 2) ** 0.25
            if abs(ref[0]) > 1e-6 * peak:
                worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
    return worst


def verify(cfg: ExperimentConfig, *, resolution_check: bool = True) -> list[Check]:
    """Invariant suite for one configuration."""
    s = cfg.scenario
    hbar = s.params.hbar
    checks = []
    dist = build_distribution(s, cfg.x)
    grid = dist.momentum_grid
    T = transmission_amplitude(s.barrier, s.params, grid.nodes)
    R = reflection_amplitude(s.barrier, s.params, grid.nodes)
    checks.append(_check("unitarity |T|^2+|R|^2-1", np.max(np.abs(np.abs(T) ** 2 + np.abs(R) ** 2 - 1)), 1e-12))
    checks.append(_check("momentum grid Gaussian mass", abs(gaussian_mass(grid, s.state, s.params) - 1), 1e-10))
    checks.append(_check("P(t;x) normalization", abs(float(dist.integrate(dist.density)) - 1), 1e-6))
    checks.append(_check("P(t;x) >= 0", float(dist.density.min()), 0.0, "min density", at_least=True))
    checks.append(_check("tail mass", dist.tail_mass_estimate, s.controls.eps_tail))
    checks.append(_check("tail log-log slope", dist.tail_slope, -2.5 + 1e-12))
    checks.append(_check("free-particle closed form", free_particle_errors(cfg), 1e-8))

    series = weak_value_series(s, dist)
    summary = uncertainty_report(series, dist, hbar)
    region = dist.density > 0.01 * dist.density.max()
    im_fd = log_density_momentum(s, dist)
    im_pw = series.p_weak.imag
    scale = np.max(np.abs(im_pw[region]))
    checks.append(_check("Im p_w = -(hbar/2) d ln P/dx", np.max(np.abs(im_pw - im_fd)[region]) / scale, 1e-4))
    H_fd = weak_energy_by_time_derivative(s, dist)
    checks.append(
        _check(
            "weak energy: spectral vs i hbar d/dt",
            np.max(np.abs(H_fd - series.H_weak)[region] / np.abs(series.H_weak[region])),
            1e-6,
        )
    )
    checks.append(
        _check("<t^2><HH*> >= hbar^2/4", summary.product_second_moment, hbar**2 / 4, at_least=True)
    )
    checks.append(
        _check("stddev bound", summary.product_stddev, summary.bound_rhs, f"rhs={summary.bound_rhs:.6g}", at_least=True)
    )
    expected = 1j * hbar * (1 - summary.mean_t * summary.density_at_zero)
    checks.append(_check("commutator = i hbar", abs(summary.commutator - expected) / hbar, 1e-2))
    checks.append(_check("Im <p_w>", abs(summary.imag_mean_p), 1e-4))
    if s.barrier.is_free:
        for t in (0.0, 200.0):
            avg = spatial_average_check(s, t)
            checks.append(_check(f"spatial average of p_w at t={t:g}", abs(avg - s.state.p_incident), 1e-6))
    if resolution_check:
        record = compute_table(cfg, resolution_check=True)
        worst = max(record.resolution.items(), key=lambda kv: kv[1]["rel_drift"])
        checks.append(_check("grid-doubling drift", worst[1]["rel_drift"], DRIFT_TOLERANCE, f"worst: {worst[0]}"))
    return checks


def cmd_verify(cfg: ExperimentConfig, out_dir, *, resolution_check: bool = True):
    checks = verify(cfg, resolution_check=resolution_check)
    payload = {
        "config_hash": cfg.config_hash,
        "config": cfg.to_dict(),
        "passed": all(c.passed for c in checks),
        "checks": [c.__dict__ for c in checks],
    }
    path = write_json(Path(out_dir) / f"{cfg.name}_verify.json", payload)
    return checks, path
