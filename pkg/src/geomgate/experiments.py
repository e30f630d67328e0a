"""Named experiments: sweeps and loop dynamics written to CSV.

Every sweep point is an independent, deterministic job; a process pool
evaluates them and ``map`` keeps the original order, so serial and
parallel runs write byte-identical files.
"""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import evolution as ev
from . import hamiltonians as hm
from .config import Experiment, ExperimentConfig, Measure, Series
from .metrics import average_fidelity, family_for, probe_state

FLOAT_FMT = "{:.12g}"
LEVEL = 0.99


@dataclass(frozen=True)
class Band:
    label: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.label}: {self.detail}"


@dataclass
class RunReport:
    name: str
    paths: list
    columns: list
    rows: list
    bands: list
    config_hash: str

    @property
    def ok(self) -> bool:
        return all(b.passed for b in self.bands)

    def column(self, label) -> np.ndarray:
        i = self.columns.index(label)
        return np.array([r[i] for r in self.rows], dtype=float)


# ---------------------------------------------------------------- single points


def apply_point(series: Series, noise: hm.NoiseConfig | None, assignments):
    """Schedule, scheme and noise of one series at one sweep point."""
    s, cfg = series.schedule, series.scheme
    gm, gz = (noise.gamma_minus, noise.gamma_z) if noise else (0.0, 0.0)
    noisy = noise is not None
    for var, x in assignments:
        if var == "T":
            s = s.with_(total_time=x)
        elif var == "E":
            s = s.with_(energy_scale=x)
        elif var in ("theta", "psi", "phi1", "phi2"):
            s = s.with_(**{var: x})
        elif var == "V":
            cfg = replace(cfg, V=x)
        elif var == "g":
            cfg = replace(cfg, g1=x, g2=x)
        elif var in ("g1", "g2"):
            cfg = replace(cfg, **{var: x})
        else:
            axis = series.noise_axis if var == "gamma" else var
            noisy = True
            if axis == "gamma_minus":
                gm = x
            else:
                gz = x
    if series.noise_axis is not None:
        noisy = True
    return s, cfg, (hm.NoiseConfig(gm, gz) if noisy else None)


def final_average(s, cfg, grid_points=8) -> float:
    target = hm.gate_target(hm.GateSpec.from_schedule(s), cfg.scheme)
    return ev.run_loop(s, cfg, target=target, family=family_for(cfg, grid_points)).final_fidelity


def final_probe(s, cfg, noise) -> float:
    start, target = probe_state(cfg, hm.GateSpec.from_schedule(s))
    return ev.run_loop(s, cfg, noise or hm.NoiseConfig(), psi0=start, target=target).final_fidelity


def _evaluate(job):
    series, noise, assignments, measure, grid_points = job
    s, cfg, nz = apply_point(series, noise, assignments)
    if measure is Measure.FINAL_PROBE:
        return final_probe(s, cfg, nz)
    return final_average(s, cfg, grid_points)


def _pool_map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [fn(j) for j in jobs]


# ---------------------------------------------------------------- dynamics


def _dynamics_job(job):
    series, T, samples, step, grid_points, amplitudes = job
    s, cfg = series.schedule.with_(total_time=T), series.scheme
    res = ev.run_loop(s, cfg, n_samples=max(1, samples // 2), step=step)
    target = hm.gate_target(hm.GateSpec.from_schedule(s), cfg.scheme)
    fam = family_for(cfg, grid_points)
    F = np.array([average_fidelity(U, target, fam) for U in res.states])
    eye = np.eye(res.states.shape[-1])
    drift = np.max(np.abs(np.conj(np.swapaxes(res.states, 1, 2)) @ res.states - eye), axis=(1, 2))
    amps = res.states.reshape(len(res.times), -1) if amplitudes else None
    return res.times, F, drift, amps


def run_dynamics(cfg: ExperimentConfig, series=None, T=None, workers=1):
    """Averaged fidelity of the running propagator on a common time grid."""
    series = cfg.series if series is None else series
    dyn = cfg.dynamics
    T = dyn.T if T is None else T
    # one shared step keeps the stored times identical across series
    step = min(
        ev.choose_step(hm.hamiltonian_for(sr.schedule.with_(total_time=T), sr.scheme), T,
                       max_frequency=ev.max_frequency_for(sr.scheme))
        for sr in series
    )
    jobs = [(sr, T, dyn.samples, step, cfg.grid_points, dyn.amplitudes) for sr in series]
    out = _pool_map(_dynamics_job, jobs, workers)
    times = out[0][0]
    columns = ["t"] + [f"F_{sr.label}" for sr in series] + [f"unitarity_{sr.label}" for sr in series]
    cols = [times] + [o[1] for o in out] + [o[2] for o in out]
    if dyn.amplitudes:
        for sr, o in zip(series, out):
            d = int(round(np.sqrt(o[3].shape[1])))
            for k in range(o[3].shape[1]):
                i, j = divmod(k, d)
                columns += [f"U{i}{j}_re_{sr.label}", f"U{i}{j}_im_{sr.label}"]
                cols += [o[3][:, k].real, o[3][:, k].imag]
    rows = [list(r) for r in zip(*cols)]
    return columns, rows


# ---------------------------------------------------------------- sweeps


def run_sweep(cfg: ExperimentConfig, workers=1):
    sweeps = [sw for sw in (cfg.sweep, cfg.sweep2) if sw is not None]
    if not sweeps:
        # Custom experiments without a sweep evaluate the base point once
        grid = [()]
    else:
        grid = list(itertools.product(*[[(sw.variable, x) for x in sw.values] for sw in sweeps]))
    jobs = [(sr, cfg.noise, point, cfg.measure, cfg.grid_points) for point in grid for sr in cfg.series]
    values = _pool_map(_evaluate, jobs, workers)
    n = len(cfg.series)
    columns = [sw.variable for sw in sweeps] + [sr.label for sr in cfg.series]
    rows = [[x for _, x in point] + values[i * n:(i + 1) * n] for i, point in enumerate(grid)]
    return columns, rows


# ---------------------------------------------------------------- bands


def first_crossing(xs, F, level=LEVEL):
    hit = np.nonzero(np.asarray(F) >= level)[0]
    return None if hit.size == 0 else float(np.asarray(xs)[hit[0]])


def _at(xs, F, x0, tol=1e-9):
    xs = np.asarray(xs)
    i = int(np.argmin(np.abs(xs - x0)))
    return float(F[i]) if abs(xs[i] - x0) <= tol else None


def _fmt(x):
    return "n/a" if x is None else f"{x:.4g}"


def _crossing_bands(rep, cfg, on_max=None, off_min=None, off_window=None):
    xs = rep.column(cfg.sweep.variable)
    out = []
    for sr in cfg.series:
        x = first_crossing(xs, rep.column(sr.label))
        if sr.schedule.tqd and on_max is not None:
            out.append(Band(f"{sr.label} first F>=0.99 at ET<={on_max}", x is not None and x <= on_max,
                            f"crossing ET={_fmt(x)}"))
        if not sr.schedule.tqd and off_min is not None:
            out.append(Band(f"{sr.label} first F>=0.99 at ET>{off_min}", x is None or x > off_min,
                            f"crossing ET={_fmt(x)}"))
        if not sr.schedule.tqd and off_window is not None:
            lo, hi = off_window
            out.append(Band(f"{sr.label} first F>=0.99 in [{lo}, {hi}]", x is not None and lo <= x <= hi,
                            f"crossing ET={_fmt(x)}"))
    return out


def _value_band(label, value, lo, hi):
    ok = value is not None and lo <= value <= hi
    return Band(label, ok, f"F={_fmt(value)} (band [{lo:.4g}, {hi:.4g}])")


def _slope_bands(rep, cfg, ratio_band):
    # pair series that share a gate and differ only in the noise axis
    out = []
    by_gate = {}
    for sr in cfg.series:
        key = (sr.schedule.theta, sr.schedule.psi, sr.schedule.phi1, sr.schedule.phi2, sr.scheme)
        by_gate.setdefault(key, {})[sr.noise_axis] = sr
    xs_name = cfg.sweep.variable
    for pair in by_gate.values():
        slopes = {}
        for axis, sr in pair.items():
            xs, F = rep.column(xs_name), rep.column(sr.label)
            slope, icept = np.polyfit(xs, F, 1)
            resid = float(np.max(np.abs(np.polyval([slope, icept], xs) - F)))
            slopes[axis] = slope
            out.append(Band(f"{sr.label} linear in rate", resid < 0.01,
                            f"slope={slope:.4g}, max residual={resid:.2e}"))
        if set(slopes) == {"gamma_minus", "gamma_z"} and ratio_band is not None:
            ratio = abs(slopes["gamma_minus"] / slopes["gamma_z"])
            lo, hi = ratio_band
            labels = "/".join(sr.label for sr in pair.values())
            out.append(Band(f"{labels} slope ratio dissipation:dephasing in [{lo}, {hi}]",
                            lo <= ratio <= hi, f"ratio={ratio:.3g}"))
    return out


def _map_bands(rep, cfg, ratio_band):
    out = []
    xa, xb = cfg.sweep.variable, cfg.sweep2.variable
    A, B = rep.column(xa), rep.column(xb)
    for sr in cfg.series:
        F = rep.column(sr.label)
        slopes = {}
        for axis, along, other in ((xa, A, B), (xb, B, A)):
            sel = other == 0
            if sel.sum() < 3:
                continue
            slope, icept = np.polyfit(along[sel], F[sel], 1)
            resid = float(np.max(np.abs(np.polyval([slope, icept], along[sel]) - F[sel])))
            slopes[axis] = slope
            out.append(Band(f"{sr.label} linear along {axis}", resid < 0.01,
                            f"slope={slope:.4g}, max residual={resid:.2e}"))
        if set(slopes) == {"gamma_minus", "gamma_z"} and ratio_band is not None:
            ratio = abs(slopes["gamma_minus"] / slopes["gamma_z"])
            lo, hi = ratio_band
            out.append(Band(f"{sr.label} slope ratio dissipation:dephasing in [{lo}, {hi}]",
                            lo <= ratio <= hi, f"ratio={ratio:.3g}"))
    return out


def _noise_ratio_band(cfg):
    if cfg.scheme.scheme is hm.Scheme.SINGLE:
        return (3.0, 5.0)
    if cfg.scheme.scheme is hm.Scheme.BLOCKADE:
        return (3.5, 6.5)
    return None


def bands_for(cfg: ExperimentConfig, rep: RunReport, dyn=None) -> list:
    kind = cfg.experiment
    if kind is Experiment.FIG2:
        out = _crossing_bands(rep, cfg, on_max=2.0)
        xs = rep.column("T")
        for sr in cfg.series:
            if sr.schedule.tqd:
                continue
            F = rep.column(sr.label)
            if (v := _at(xs, F, 15.0)) is not None:
                out.append(_value_band(f"{sr.label} F(ET=15)>=0.99", v, LEVEL, 1.0))
            if (v := _at(xs, F, 6.0)) is not None:
                out.append(_value_band(f"{sr.label} F(ET=6)=0.85+-0.03", v, 0.82, 0.88))
        return out
    if kind in (Experiment.FIG3, Experiment.FIG6B) and dyn is not None:
        columns, rows = dyn
        out = []
        for sr in cfg.series:
            final = rows[-1][columns.index(f"F_{sr.label}")]
            if sr.schedule.tqd:
                out.append(_value_band(f"{sr.label} final F within 0.01 of 1", final, 0.99, 1.0))
            elif kind is Experiment.FIG3 and abs(cfg.dynamics.T - 6.0) < 1e-9:
                out.append(_value_band(f"{sr.label} final F=0.85+-0.03", final, 0.82, 0.88))
        return out
    if kind is Experiment.FIG6:
        return _crossing_bands(rep, cfg, on_max=2.5, off_min=16.5)
    if kind is Experiment.FIG7:
        out = []
        xs = rep.column("V")
        for sr in cfg.series:
            F = rep.column(sr.label)
            is_pi = abs(sr.schedule.theta - np.pi) < 1e-9
            vmin = 30.0 if is_pi else 5.0
            sel = xs >= vmin
            worst = float(np.min(F[sel])) if sel.any() else None
            out.append(_value_band(f"{sr.label} F>=0.99 for V>={vmin:g}", worst, LEVEL, 1.0))
            if is_pi and (v := _at(xs, F, 10.0)) is not None:
                out.append(_value_band(f"{sr.label} F(V=10)=0.9+-0.05", v, 0.85, 0.95))
        return out
    if kind is Experiment.FIG9:
        out = _crossing_bands(rep, cfg, on_max=1.0, off_window=(15.0, 17.0))
        xs = rep.column("T")
        for sr in cfg.series:
            if not sr.schedule.tqd and (v := _at(xs, rep.column(sr.label), 20.0)) is not None:
                out.append(_value_band(f"{sr.label} F(ET=20)=0.8+-0.05", v, 0.75, 0.85))
        return out
    if kind is Experiment.FIG4:
        return _slope_bands(rep, cfg, _noise_ratio_band(cfg))
    if kind in (Experiment.FIG5, Experiment.FIG8):
        return _map_bands(rep, cfg, _noise_ratio_band(cfg))
    return []


# ---------------------------------------------------------------- driver


def write_csv(path: Path, columns, rows, config_hash):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(columns) + ["config_hash"])
        for r in rows:
            w.writerow([FLOAT_FMT.format(float(x)) for x in r] + [config_hash])


def output_dir(cfg: ExperimentConfig, override=None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get("GEOMGATE_OUT") or cfg.output)


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers=None) -> RunReport:
    """Run ``cfg``, write its CSV file(s) and evaluate the acceptance bands."""
    workers = cfg.workers if workers is None else workers
    out = output_dir(cfg, out_dir)
    h = cfg.config_hash
    paths, dyn = [], None
    if cfg.measure is Measure.DYNAMICS:
        columns, rows = dyn = run_dynamics(cfg, workers=workers)
    else:
        columns, rows = run_sweep(cfg, workers)
    path = out / f"{cfg.name}.csv"
    write_csv(path, columns, rows, h)
    paths.append(path)
    if cfg.measure is not Measure.DYNAMICS and cfg.dynamics is not None:
        dcols, drows = run_dynamics(cfg, workers=workers)
        dpath = out / f"{cfg.name}_dynamics.csv"
        write_csv(dpath, dcols, drows, h)
        paths.append(dpath)
    rep = RunReport(cfg.name, paths, columns, rows, [], h)
    rep.bands = bands_for(cfg, rep, dyn)
    return rep
