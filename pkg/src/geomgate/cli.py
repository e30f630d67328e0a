"""Command-line front end.

::

    geomgate run <config.toml> [--out DIR] [--workers N] [--check]
    geomgate validate <config.toml>
    geomgate pulses <config.toml> [--rate R] [--series LABEL] [--out FILE]
    geomgate dump-hamiltonian --scheme S [--frame F] --time t [--config FILE | schedule flags]

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 acceptance-band
failure (only with ``--check``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cf
from . import hamiltonians as hm
from .evolution import IntegrationError
from .pulses import PulseSchedule, drive_pair

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BAND = 0, 2, 3, 4

log = logging.getLogger("geomgate")


def _cmd_run(args) -> int:
    from .experiments import run_experiment

    cfg = cf.load(args.config)
    t0 = time.perf_counter()
    rep = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    elapsed = time.perf_counter() - t0
    for band in rep.bands:
        print(band.line())
    passed = sum(b.passed for b in rep.bands)
    files = ", ".join(str(p) for p in rep.paths)
    print(f"{cfg.name} [{cfg.experiment.value}] {len(rep.rows)} rows -> {files} "
          f"(hash {rep.config_hash}, {elapsed:.1f}s); bands {passed}/{len(rep.bands)} pass")
    if args.check and not rep.ok:
        return EXIT_BAND
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        raw = cf.load_raw(args.config)
    except cf.ConfigError as exc:
        for d in exc.diagnostics:
            print(d)
        return EXIT_CONFIG
    diag = cf.validate(raw)
    for d in diag:
        print(d)
    if diag:
        return EXIT_CONFIG
    print(f"{args.config}: ok")
    return EXIT_OK


def _cmd_pulses(args) -> int:
    cfg = cf.load(args.config)
    series = cfg.series[0]
    if args.series is not None:
        match = [s for s in cfg.series if s.label == args.series]
        if not match:
            raise cf.ConfigError([f"no series labelled {args.series!r}"])
        series = match[0]
    s = series.schedule
    if args.rate <= 0:
        raise cf.ConfigError(["--rate must be positive"])
    n = max(2, int(np.ceil(s.total_time * args.rate)) + 1)
    t = np.linspace(0.0, s.total_time, n)
    dr = drive_pair(t, s)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "re_omega1", "im_omega1", "re_omega2", "im_omega2", "delta", "lambda"])
        lam = dr.lambda_cd if s.tqd else np.zeros_like(t)
        for row in zip(t, dr.omega1.real, dr.omega1.imag, dr.omega2.real, dr.omega2.imag, dr.delta, lam):
            w.writerow(["{:.12g}".format(float(x)) for x in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_dump(args) -> int:
    if args.config:
        cfg = cf.load(args.config)
        s, scheme = cfg.schedule, cfg.scheme
        scheme = hm.SchemeConfig(args.scheme or scheme.scheme, args.frame or scheme.frame,
                                 scheme.V, scheme.g1, scheme.g2)
    else:
        try:
            s = PulseSchedule(
                args.T, energy_scale=args.E, theta=cf.parse_number(args.theta),
                psi=cf.parse_number(args.psi), phi1=cf.parse_number(args.phi1),
                phi2=cf.parse_number(args.phi2), tqd=not args.no_tqd,
            )
            scheme = hm.SchemeConfig(args.scheme or "single", args.frame or "full",
                                     V=args.V, g1=args.g1, g2=args.g2)
        except ValueError as exc:
            raise cf.ConfigError([str(exc)]) from exc
    try:
        H = hm.hamiltonian_for(s, scheme)(args.time)
    except ValueError as exc:
        raise cf.ConfigError([str(exc)]) from exc
    payload = {
        "scheme": scheme.scheme.value,
        "frame": scheme.frame.value,
        "time": args.time,
        "dimension": H.shape[0],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in H],
    }
    print(json.dumps(payload, indent=None if args.compact else 2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geomgate", description="Geometric gates with transitionless driving")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config and write CSV")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides GEOMGATE_OUT and the config)")
    r.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
    r.add_argument("--check", action="store_true", help="exit 4 if an acceptance band fails")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="report config problems without running")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)

    w = sub.add_parser("pulses", help="dump drive waveforms of a config as CSV")
    w.add_argument("config")
    w.add_argument("--rate", type=float, default=100.0, help="samples per unit time")
    w.add_argument("--series", help="series label (default: first)")
    w.add_argument("--out", help="file to write (default: stdout)")
    w.set_defaults(func=_cmd_pulses)

    d = sub.add_parser("dump-hamiltonian", help="print H(t) as JSON ([re, im] pairs, row-major)")
    d.add_argument("--scheme", choices=[s.value for s in hm.Scheme])
    d.add_argument("--frame", choices=[f.value for f in hm.Frame])
    d.add_argument("--time", type=float, required=True)
    d.add_argument("--config")
    d.add_argument("--T", type=float, default=10.0)
    d.add_argument("--E", type=float, default=1.0)
    d.add_argument("--theta", default="0")
    d.add_argument("--psi", default="0")
    d.add_argument("--phi1", default="0")
    d.add_argument("--phi2", default="0")
    d.add_argument("--no-tqd", action="store_true")
    d.add_argument("--V", type=float, default=100.0)
    d.add_argument("--g1", type=float, default=100.0)
    d.add_argument("--g2", type=float, default=100.0)
    d.add_argument("--compact", action="store_true")
    d.set_defaults(func=_cmd_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except cf.ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
