"""Command-line experiment runner.

Usage::

    wprobe respond --config cfg.json --out results/
    wprobe reconstruct --config demo:accelerated_unruh
    wprobe scaling --config demo:scaling_3d --threads 4
    wprobe sweep --config cfg.json

Exit status is 0 on success, 2 on a validation error and 3 on a numerical
failure.  Set ``WPROBE_LOG`` (e.g. ``DEBUG``) to change the log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from . import config as cfgmod
from .delta_limit import EtaSchedule, eta_sweep, scaling_experiment
from .errors import ConfigError, DomainError, InvalidParameterError, NotSupportedError, WprobeError
from .protocol import ProtocolConfig, reconstruction_sweep
from .response import excitation_probability

log = logging.getLogger("wprobe")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _complex(z):
    return [z.real, z.imag]


def run_respond(cfg, out, stem, workers=None):
    comb = cfgmod.make_comb(cfg)
    det = cfgmod.make_detector(cfg)
    corr = cfgmod.make_correlator(cfg)
    outcome = excitation_probability(comb, det, corr, quad=cfgmod.make_quad(cfg, workers))
    columns = ["n", "local_term", "p_total", "re_c", "im_c", "err_est", "flag"]
    rows = [{"n": n, "local_term": v} for n, v in enumerate(outcome.local_terms)]
    finite = all(math.isfinite(x) for x in (outcome.total, outcome.nonlocal_c.real, outcome.error))
    rows.append({"n": "summary", "p_total": outcome.total, "re_c": outcome.nonlocal_c.real,
                 "im_c": outcome.nonlocal_c.imag, "err_est": outcome.error,
                 "flag": "" if finite else "non_finite"})
    path = out / f"{stem}_respond.csv"
    _write_csv(path, columns, rows)
    return [path], {"respond": not finite}


def run_reconstruct(cfg, out, stem, workers=None):
    p = cfg["protocol"]
    proto = ProtocolConfig(zeta=float(p["zeta_grid"][0]), tau0=float(p["tau0"]),
                           eta_fractions=tuple(p["eta_fractions"]), k_even=p["k_even"],
                           k_quarter=p["k_quarter"], coupling=float(cfg["detector"]["lambda"]),
                           route=p["route"], shape=cfg["comb"]["shape"], quad=cfgmod.make_quad(cfg))
    corr = cfgmod.make_correlator(cfg)
    result = reconstruction_sweep(p["zeta_grid"], proto, corr, workers=workers)
    csv_path = result.write_csv(out / f"{stem}_reconstruct.csv")
    json_path = out / f"{stem}_convergence.json"
    _write_json(json_path, {"route": result.route, "points": result.report()})
    flags = {f"zeta={pt.zeta!r}": bool(pt.flags) for pt in result.points}
    if result.failed:
        raise ArithmeticError("reconstruction failed at every zeta")
    return [csv_path, json_path], flags


def run_scaling(cfg, out, stem, workers=None):
    det = cfgmod.make_detector(cfg)
    mass = float(cfg["field"]["mass"])
    schedule = _schedule(cfg["scaling"]["etas"], "scaling.etas")
    reports, flags = [], {}
    for d in cfg["scaling"]["dims"]:
        if d == 1 and mass == 0:
            raise ConfigError("massless d=1 has an infrared divergence (and no finite single-kick limit)",
                              "scaling.dims")
        if d not in (2, 3):
            raise ConfigError("scaling experiments support d in {2, 3}", "scaling.dims")
        rep = scaling_experiment(int(d), cfg["comb"]["shape"], det, schedule, mass=mass,
                                 quad=cfgmod.make_quad(cfg), workers=workers)
        reports.append(rep.to_dict())
        flags[f"d={d}"] = rep.inconclusive
    path = out / f"{stem}_scaling.json"
    _write_json(path, {"reports": reports})
    return [path], flags


def run_sweep(cfg, out, stem, workers=None):
    comb = cfgmod.make_comb(cfg)
    det = cfgmod.make_detector(cfg)
    corr = cfgmod.make_correlator(cfg)
    schedule = _schedule(cfg["sweep"]["etas"], "sweep.etas", cfg["sweep"]["extrapolation_order"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = eta_sweep(comb, det, corr, schedule, quad=cfgmod.make_quad(cfg), workers=workers)
    rows = [{"eta": e, "re_c": v.real, "im_c": v.imag, "err_est": err, "flag": ""}
            for e, v, err in zip(res.etas, res.values, res.errors)]
    rows.append({"eta": 0.0, "re_c": res.limit.real, "im_c": res.limit.imag, "err_est": res.limit_error,
                 "flag": "extrapolated" + ("" if res.monotone else ";non_monotone")})
    csv_path = out / f"{stem}_sweep.csv"
    _write_csv(csv_path, ["eta", "re_c", "im_c", "err_est", "flag"], rows)
    json_path = out / f"{stem}_sweep.json"
    report = res.to_dict()
    report["warnings"] = sorted({str(w.message) for w in caught})
    _write_json(json_path, report)
    return [csv_path, json_path], {"sweep": not res.monotone}


def _schedule(etas, key, order=2):
    try:
        return EtaSchedule(tuple(etas), order)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), key) from exc


COMMANDS = {"respond": run_respond, "reconstruct": run_reconstruct, "scaling": run_scaling, "sweep": run_sweep}


def build_parser():
    parser = argparse.ArgumentParser(prog="wprobe", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"respond": "excitation probability of a comb and its decomposition",
             "reconstruct": "two-kick reconstruction of W over a grid of lapses",
             "scaling": "single-kick eta^(1-d) scaling experiment",
             "sweep": "eta sweep of the non-local correlations with extrapolation"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON config file, or demo:<name> for a shipped demo")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--seed", type=int, default=None, help="reserved; nothing is random yet")
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("WPROBE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = cfgmod.load(args.config)
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        out = Path(args.out or cfg["output"]["directory"])
        out.mkdir(parents=True, exist_ok=True)
        stem = cfg["output"]["stem"]
        echo = out / f"{stem}_config.json"
        echo.write_text(cfgmod.dumps(cfg))
        files, flags = COMMANDS[args.command](cfg, out, stem, workers=args.threads)
    except (ConfigError, InvalidParameterError, DomainError, NotSupportedError) as exc:
        log.error("validation error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (WprobeError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = out / f"{stem}_{args.command}_manifest.json"
    _write_json(manifest, {
        "command": args.command,
        "version": __version__,
        "config": cfg,
        "seed": args.seed,
        "threads": args.threads,
        "duration_s": time.perf_counter() - start,
        "error_flags": flags,
        "files": [p.name for p in [echo, *files, manifest]],
    })
    for p in files:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
