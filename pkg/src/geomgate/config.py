"""Experiment configuration: TOML loading, validation and resolution.

A config file has the sections ``[experiment]``, ``[schedule]``,
``[scheme]``, optional ``[noise]``, optional ``[sweep]``/``[sweep2]``,
optional ``[dynamics]`` and any number of ``[[series]]`` tables. Each
series overrides schedule/scheme fields and becomes one CSV column.
Angles may be given as numbers or as arithmetic strings such as
``"3*pi/2"``. All physical quantities are in units of ``E``.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
import operator
import sys
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .hamiltonians import Frame, NoiseConfig, Scheme, SchemeConfig
from .pulses import PI, PulseSchedule

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class Experiment(str, Enum):
    FIG2 = "Fig2_FinalFidelityVsT"
    FIG3 = "Fig3_FidelityDynamics"
    FIG4 = "Fig4_NoiseLines"
    FIG5 = "Fig5_NoiseMap"
    FIG6 = "Fig6_DoubleFinalVsT"
    FIG6B = "Fig6b_DoubleDynamics"
    FIG7 = "Fig7_VSweep"
    FIG8 = "Fig8_DoubleNoiseMap"
    FIG9 = "Fig9_MediatedSwap"
    CUSTOM = "Custom"


class Measure(str, Enum):
    FINAL_AVERAGE = "final_average"  # family-averaged gate fidelity at T
    FINAL_PROBE = "final_probe"  # probe-state fidelity at T (noise allowed)
    DYNAMICS = "dynamics"  # averaged fidelity along the loop


DEFAULT_MEASURE = {
    Experiment.FIG2: Measure.FINAL_AVERAGE,
    Experiment.FIG3: Measure.DYNAMICS,
    Experiment.FIG4: Measure.FINAL_PROBE,
    Experiment.FIG5: Measure.FINAL_PROBE,
    Experiment.FIG6: Measure.FINAL_AVERAGE,
    Experiment.FIG6B: Measure.DYNAMICS,
    Experiment.FIG7: Measure.FINAL_AVERAGE,
    Experiment.FIG8: Measure.FINAL_PROBE,
    Experiment.FIG9: Measure.FINAL_AVERAGE,
}

#: (theta, psi, phi1, phi2) of the named gates
GATE_PRESETS = {
    "sigma_x": (PI / 2, 0.0, 0.0, 0.0),
    "sigma_y": (PI / 2, PI / 2, 0.0, 0.0),
    "sigma_z": (PI, 0.0, 0.0, 0.0),
    "pi8": (0.0, 0.0, 0.0, 3 * PI / 4),
    "swap_like": (PI / 2, 0.0, 0.0, 0.0),
    "swap": (3 * PI / 2, 0.0, 0.0, 0.0),
}

SWEEP_VARIABLES = ("T", "E", "theta", "psi", "phi1", "phi2", "V", "g", "g1", "g2",
                   "gamma_minus", "gamma_z", "gamma")
NOISE_AXES = ("gamma_minus", "gamma_z")

SECTION_KEYS = {
    "experiment": {"kind", "name", "workers", "output", "measure", "grid_points"},
    "schedule": {"T", "E", "theta", "psi", "phi1", "phi2", "tqd", "gate"},
    "scheme": {"kind", "frame", "V", "g1", "g2", "g"},
    "noise": {"gamma_minus", "gamma_z"},
    "sweep": {"variable", "min", "max", "points", "values"},
    "sweep2": {"variable", "min", "max", "points", "values"},
    "dynamics": {"T", "samples", "amplitudes"},
}
SERIES_KEYS = {"label", "noise_axis"} | (SECTION_KEYS["schedule"] - {"gate"}) | {"gate", "V", "g", "g1", "g2"}

# ---------------------------------------------------------------- angles

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(value) -> float:
    """Number or arithmetic string over ``pi`` (e.g. ``"-3*pi/4"``)."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a number, got {value!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return PI
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {value!r}")

    try:
        return ev(ast.parse(value.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {value!r}") from exc


# ---------------------------------------------------------------- resolved config


@dataclass(frozen=True)
class Sweep:
    variable: str
    values: tuple[float, ...]

    @classmethod
    def from_table(cls, t: dict) -> "Sweep":
        if "values" in t:
            return cls(t["variable"], tuple(parse_number(v) for v in t["values"]))
        lo, hi, n = parse_number(t["min"]), parse_number(t["max"]), int(t["points"])
        return cls(t["variable"], tuple(float(x) for x in np.linspace(lo, hi, n)))


@dataclass(frozen=True)
class Series:
    label: str
    schedule: PulseSchedule
    scheme: SchemeConfig
    noise_axis: str | None = None


@dataclass(frozen=True)
class Dynamics:
    T: float
    samples: int = 200
    amplitudes: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    name: str
    schedule: PulseSchedule
    scheme: SchemeConfig
    measure: Measure
    series: tuple[Series, ...]
    noise: NoiseConfig | None = None
    sweep: Sweep | None = None
    sweep2: Sweep | None = None
    dynamics: Dynamics | None = None
    output: str = "results"
    workers: int = 1
    grid_points: int = 8
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """First 12 hex digits of the sha256 of the canonical JSON form."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------- loading


def load_raw(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError([f"config file not found: {path}"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"invalid TOML in {path}: {exc}"]) from exc
    raw.setdefault("experiment", {}).setdefault("name", path.stem)
    return raw


def load(path) -> ExperimentConfig:
    return from_dict(load_raw(path))


def _check_number(diag, where, value, *, positive=False, nonneg=False):
    try:
        x = parse_number(value)
    except ValueError as exc:
        diag.append(f"{where}: {exc}")
        return None
    if not math.isfinite(x):
        diag.append(f"{where}: must be finite")
    elif positive and x <= 0:
        diag.append(f"{where}: must be positive")
    elif nonneg and x < 0:
        diag.append(f"{where}: must be non-negative")
    return x


def _validate_schedule_fields(diag, where, table):
    for key in ("T", "E"):
        if key in table:
            _check_number(diag, f"{where}.{key}", table[key], positive=True)
    for key in ("theta", "psi", "phi1", "phi2"):
        if key in table:
            _check_number(diag, f"{where}.{key}", table[key])
    if "tqd" in table and not isinstance(table["tqd"], bool):
        diag.append(f"{where}.tqd: must be true or false")
    if "gate" in table and table["gate"] not in GATE_PRESETS:
        diag.append(f"{where}.gate: unknown preset {table['gate']!r} (known: {', '.join(GATE_PRESETS)})")


def _validate_scheme_fields(diag, where, table, scheme):
    for key in ("V", "g", "g1", "g2"):
        if key in table:
            x = _check_number(diag, f"{where}.{key}", table[key])
            if x is None:
                continue
            relevant = (key == "V" and scheme == "blockade") or (key != "V" and scheme == "mediated")
            if relevant and x <= 0:
                label = "blockade pair requires V > 0" if key == "V" else f"mediated scheme requires {key} > 0"
                diag.append(f"{where}.{key}: {label}")


def _validate_sweep(diag, where, table, scheme, has_noise_axis):
    if not isinstance(table, dict):
        diag.append(f"{where}: must be a table")
        return
    _unknown_keys(diag, where, table, SECTION_KEYS["sweep"])
    var = table.get("variable")
    if var not in SWEEP_VARIABLES:
        diag.append(f"{where}.variable: unknown sweep variable {var!r}")
    elif var == "V" and scheme != "blockade":
        diag.append(f"{where}.variable: V only applies to the blockade scheme")
    elif var in ("g", "g1", "g2") and scheme != "mediated":
        diag.append(f"{where}.variable: {var} only applies to the mediated scheme")
    elif var == "gamma" and not has_noise_axis:
        diag.append(f"{where}.variable: 'gamma' needs noise_axis on every series")
    if "values" in table:
        vals = table["values"]
        if not isinstance(vals, list) or not vals:
            diag.append(f"{where}.values: must be a non-empty list")
            return
        xs = [_check_number(diag, f"{where}.values", v) for v in vals]
    else:
        missing = [k for k in ("min", "max", "points") if k not in table]
        if missing:
            diag.append(f"{where}: missing {', '.join(missing)}")
            return
        lo = _check_number(diag, f"{where}.min", table["min"])
        hi = _check_number(diag, f"{where}.max", table["max"])
        pts = table["points"]
        if not isinstance(pts, int) or isinstance(pts, bool) or pts < 1:
            diag.append(f"{where}.points: must be an integer >= 1")
        elif pts == 1 and lo is not None and hi is not None and lo != hi:
            diag.append(f"{where}: a single point needs min == max")
        xs = [lo, hi]
    if var in ("T", "E") and any(x is not None and x <= 0 for x in xs):
        diag.append(f"{where}: {var} values must be positive")
    if var in ("gamma_minus", "gamma_z", "gamma") and any(x is not None and x < 0 for x in xs):
        diag.append(f"{where}: decay rates must be non-negative")


def _unknown_keys(diag, where, table, allowed):
    for key in sorted(set(table) - allowed):
        diag.append(f"{where}: unknown key {key!r}")


def validate(raw: dict) -> list[str]:
    """Every problem with a raw config, without running anything."""
    diag: list[str] = []
    for section in sorted(set(raw) - set(SECTION_KEYS) - {"series"}):
        diag.append(f"unknown section [{section}]")
    for section, allowed in SECTION_KEYS.items():
        if section in raw:
            if not isinstance(raw[section], dict):
                diag.append(f"[{section}] must be a table")
                continue
            if section not in ("sweep", "sweep2"):
                _unknown_keys(diag, f"[{section}]", raw[section], allowed)

    exp = raw.get("experiment", {})
    kind = exp.get("kind")
    try:
        kind = Experiment(kind)
    except ValueError:
        diag.append(f"[experiment].kind: unknown experiment {kind!r} "
                    f"(known: {', '.join(e.value for e in Experiment)})")
        kind = None
    measure = exp.get("measure")
    if measure is not None:
        try:
            measure = Measure(measure)
        except ValueError:
            diag.append(f"[experiment].measure: unknown measure {measure!r}")
            measure = None
    if measure is None and kind is not None:
        measure = DEFAULT_MEASURE.get(kind)
        if kind is Experiment.CUSTOM and "measure" not in exp:
            diag.append("[experiment].measure: required for Custom experiments")
    workers = exp.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        diag.append("[experiment].workers: must be an integer >= 1")
    gp = exp.get("grid_points", 8)
    if not isinstance(gp, int) or gp < 5:
        diag.append("[experiment].grid_points: must be an integer >= 5")

    sched = raw.get("schedule", {})
    if "T" not in sched:
        diag.append("[schedule].T: required")
    _validate_schedule_fields(diag, "[schedule]", sched)

    sch = raw.get("scheme", {})
    scheme = sch.get("kind", "single")
    if scheme not in {s.value for s in Scheme}:
        diag.append(f"[scheme].kind: unknown scheme {scheme!r}")
    if sch.get("frame", "full") not in {f.value for f in Frame}:
        diag.append(f"[scheme].frame: unknown frame {sch.get('frame')!r}")
    _validate_scheme_fields(diag, "[scheme]", sch, scheme)

    noise = raw.get("noise")
    series = raw.get("series", [{}])
    if not isinstance(series, list) or not all(isinstance(s, dict) for s in series):
        diag.append("[[series]] must be an array of tables")
        series = []
    axes = [s.get("noise_axis") for s in series]
    noisy = noise is not None or any(a is not None for a in axes) or any(
        raw.get(k, {}).get("variable", "").startswith("gamma") for k in ("sweep", "sweep2")
        if isinstance(raw.get(k), dict)
    )
    if noisy and scheme == "mediated":
        diag.append("noise requested for the mediated scheme: no noise model is defined for this scheme")
    if noisy and scheme == "blockade" and sch.get("frame", "full") == "effective":
        diag.append("noise on the blockade pair needs frame = 'full'")
    if noisy and measure not in (None, Measure.FINAL_PROBE):
        diag.append(f"noise is only supported with measure = '{Measure.FINAL_PROBE.value}'")
    if noise is not None and isinstance(noise, dict):
        for key in NOISE_AXES:
            if key in noise:
                _check_number(diag, f"[noise].{key}", noise[key], nonneg=True)

    labels = []
    for i, s in enumerate(series):
        where = f"[[series]] #{i + 1}"
        _unknown_keys(diag, where, s, SERIES_KEYS)
        _validate_schedule_fields(diag, where, s)
        _validate_scheme_fields(diag, where, s, scheme)
        if s.get("noise_axis") not in (None,) + NOISE_AXES:
            diag.append(f"{where}.noise_axis: must be one of {', '.join(NOISE_AXES)}")
        labels.append(s.get("label", f"series{i + 1}"))
    if len(set(labels)) != len(labels):
        diag.append("[[series]] labels must be unique")

    has_axis = bool(series) and all(a is not None for a in axes)
    for key in ("sweep", "sweep2"):
        if key in raw:
            _validate_sweep(diag, f"[{key}]", raw[key], scheme, has_axis)
    if "sweep2" in raw and "sweep" not in raw:
        diag.append("[sweep2] needs [sweep]")
    if isinstance(raw.get("sweep"), dict) and isinstance(raw.get("sweep2"), dict):
        if raw["sweep"].get("variable") == raw["sweep2"].get("variable"):
            diag.append("[sweep] and [sweep2] must use different variables")

    if measure is Measure.DYNAMICS and ("sweep" in raw):
        diag.append("dynamics runs take no [sweep]; the time grid comes from [dynamics]")
    if measure is not Measure.DYNAMICS and "sweep" not in raw and kind is not Experiment.CUSTOM:
        diag.append(f"[sweep]: required for {kind.value if kind else 'this experiment'}")
    dyn = raw.get("dynamics")
    if isinstance(dyn, dict):
        if "T" in dyn:
            _check_number(diag, "[dynamics].T", dyn["T"], positive=True)
        n = dyn.get("samples", 200)
        if not isinstance(n, int) or n < 2:
            diag.append("[dynamics].samples: must be an integer >= 2")
    return diag


def _resolve_schedule(base: dict, over: dict) -> PulseSchedule:
    table = {**base, **over}
    keys = ("theta", "psi", "phi1", "phi2")
    vals = dict.fromkeys(keys, 0.0)
    # layers in increasing priority; a series gate preset resets the base angles
    for layer in (base, over):
        if "gate" in layer:
            vals = dict(zip(keys, GATE_PRESETS[layer["gate"]]))
        vals.update({k: parse_number(layer[k]) for k in keys if k in layer})
    return PulseSchedule(
        total_time=parse_number(table["T"]),
        energy_scale=parse_number(table.get("E", 1.0)),
        tqd=bool(table.get("tqd", True)),
        **vals,
    )


def _resolve_scheme(base: dict, over: dict) -> SchemeConfig:
    table = {**base, **over}
    g = table.get("g")
    g1 = parse_number(table.get("g1", g if g is not None else 100.0))
    g2 = parse_number(table.get("g2", g if g is not None else 100.0))
    return SchemeConfig(
        scheme=table.get("kind", "single"),
        frame=table.get("frame", "full"),
        V=parse_number(table.get("V", 100.0)),
        g1=g1,
        g2=g2,
    )


def from_dict(raw: dict) -> ExperimentConfig:
    diag = validate(raw)
    if diag:
        raise ConfigError(diag)
    exp = raw.get("experiment", {})
    kind = Experiment(exp["kind"])
    measure = Measure(exp["measure"]) if "measure" in exp else DEFAULT_MEASURE[kind]
    base_sched, base_scheme = raw.get("schedule", {}), raw.get("scheme", {})
    series = []
    for i, s in enumerate(raw.get("series", [{}])):
        sched_over = {k: v for k, v in s.items() if k in SECTION_KEYS["schedule"]}
        scheme_over = {k: v for k, v in s.items() if k in {"V", "g", "g1", "g2"}}
        series.append(Series(
            label=s.get("label", f"series{i + 1}"),
            schedule=_resolve_schedule(base_sched, sched_over),
            scheme=_resolve_scheme(base_scheme, scheme_over),
            noise_axis=s.get("noise_axis"),
        ))
    noise = raw.get("noise")
    dyn = raw.get("dynamics")
    if measure is Measure.DYNAMICS and dyn is None:
        dyn = {}
    return ExperimentConfig(
        experiment=kind,
        name=str(exp.get("name", kind.value)),
        schedule=_resolve_schedule(base_sched, {}),
        scheme=_resolve_scheme(base_scheme, {}),
        measure=measure,
        series=tuple(series),
        noise=None if noise is None else NoiseConfig(
            parse_number(noise.get("gamma_minus", 0.0)), parse_number(noise.get("gamma_z", 0.0))
        ),
        sweep=Sweep.from_table(raw["sweep"]) if "sweep" in raw else None,
        sweep2=Sweep.from_table(raw["sweep2"]) if "sweep2" in raw else None,
        dynamics=None if dyn is None else Dynamics(
            T=parse_number(dyn.get("T", base_sched["T"])),
            samples=int(dyn.get("samples", 200)),
            amplitudes=bool(dyn.get("amplitudes", False)),
        ),
        output=str(exp.get("output", "results")),
        workers=int(exp.get("workers", 1)),
        grid_points=int(exp.get("grid_points", 8)),
        raw=raw,
    )


def describe(cfg: ExperimentConfig) -> dict:
    """Plain-dict view of a resolved config (for logs and summaries)."""
    return {
        "experiment": cfg.experiment.value,
        "name": cfg.name,
        "measure": cfg.measure.value,
        "series": [
            {"label": s.label, "schedule": asdict(s.schedule), "scheme": asdict(s.scheme),
             "noise_axis": s.noise_axis}
            for s in cfg.series
        ],
        "hash": cfg.config_hash,
    }
