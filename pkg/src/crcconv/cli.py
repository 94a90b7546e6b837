"""Command-line driver: ``crcconv <subcommand> [options]``.

Every data file starts with the resolved configuration and seed (a JSON
header for JSON output, ``#``-prefixed lines for CSV) and contains nothing
time-dependent, so reruns with the same inputs are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 inconclusive CRC search,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, complexity, dso, listrank, sim
from .convcode import CodeSpec, ZT, TB

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERIC = 4


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    pass


# ---------------------------------------------------------------- parsing

def _float_list(text: str) -> list[float]:
    """Comma list of numbers, or an inclusive range ``start:stop:step``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _int_list(text: str) -> list[int]:
    """Comma list of integers or an inclusive range ``a-b``."""
    try:
        out: list[int] = []
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--config", help="CodeSpec JSON file; inline code flags override it")
    g.add_argument("--out", help="output file (stdout when omitted)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1, help="worker processes for simulations")
    c = p.add_argument_group("code")
    c.add_argument("--gens", help="octal generators, comma separated, e.g. 13,17")
    c.add_argument("--nu", type=int, help="overall constraint length")
    c.add_argument("--k", type=int, help="information length")
    c.add_argument("--mode", choices=[ZT, TB])
    c.add_argument("--crc", help="CRC polynomial in hex, or 'none'")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="crcconv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crc-search", parents=[common], help="DSO CRC search")
    p.add_argument("--m", type=_int_list, required=True, help="CRC degrees, e.g. 3-6")
    p.add_argument("--d-tilde", type=int, help="distance threshold (default 2w*+1)")
    p.add_argument("--cache", help="JSON spectrum cache reused across runs")
    p.add_argument("--audit-dir", help="directory for per-degree audit JSON")

    p = sub.add_parser("spectrum", parents=[common], help="distance spectra B_d and C_d")
    p.add_argument("--d-tilde", type=int, help="count weights below this (default 2w*+1)")
    p.add_argument("--method", choices=["trellis", "iee"], default="trellis")
    p.add_argument("--bit-order", choices=[dso.REVERSED, dso.DIRECT], default=dso.REVERSED)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo list decoding")
    p.add_argument("--snr", type=_float_list, default=[0.0], help="SNR grid in dB")
    p.add_argument("--psi", type=int, help="maximum list size (unbounded when omitted)")
    p.add_argument("--target-ue", type=int, default=100)
    p.add_argument("--max-trials", type=int, default=10 ** 6)
    p.add_argument("--chunk", type=int, default=2000)
    p.add_argument("--sim-mode", choices=[sim.CHANNEL, sim.FIXED_NORM, sim.ORIGIN], default=sim.CHANNEL)
    p.add_argument("--eta", type=_float_list, default=[])
    p.add_argument("--random-message", action="store_true")

    p = sub.add_parser("bounds", parents=[common], help="union, TUB, NACK, RCU and MC curves")
    p.add_argument("--snr", type=_float_list, default=[0.0])
    p.add_argument("--d-tilde", type=int, help="truncation distance (default 2w*+1)")
    p.add_argument("--no-finite-length", action="store_true", help="skip the RCU and MC columns")

    p = sub.add_parser("listrank", parents=[common], help="conditional expected list rank over eta")
    p.add_argument("--eta", type=_float_list, required=True)
    p.add_argument("--mu", type=_int_list, default=[], help="onion model orders")
    p.add_argument("--trials", type=int, default=2000, help="trials per eta")
    p.add_argument("--origin-trials", type=int, default=2000, help="trials for the saturation rank")
    p.add_argument("--l-bar", type=float, help="skip the origin run and use this saturation rank")
    p.add_argument("--chunk", type=int, default=2000)

    p = sub.add_parser("complexity", parents=[common], help="SLVD and WAVA cost table")
    p.add_argument("--el", type=_float_list, required=True, help="expected list ranks")
    p.add_argument("--ei", type=float, help="expected insertions (default: upper bound)")
    p.add_argument("--c1", type=float, default=complexity.C1)
    p.add_argument("--c2", type=float, default=complexity.C2)
    p.add_argument("--wava-nu", type=_int_list, default=[], help="constraint lengths for WAVA rows")
    p.add_argument("--wava-iterations", type=float, default=3.0)
    return parser


def resolve_spec(args, need_crc: bool = False) -> CodeSpec:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {args.config} is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if args.gens:
        data["gens_octal"] = [g.strip() for g in args.gens.split(",")]
        data.pop("omega", None)
    if args.nu is not None:
        data["nu"] = args.nu
    if args.k is not None:
        data["k"] = args.k
    if args.mode:
        data["mode"] = args.mode
    if args.crc is not None:
        data["crc_hex"] = None if args.crc.lower() == "none" else args.crc
        data.pop("m", None)
    for key in ("gens_octal", "k"):
        if key not in data:
            raise ConfigError(f"missing {key!r}: pass --config or --{'gens' if key == 'gens_octal' else 'k'}")
    try:
        spec = CodeSpec.from_dict(data)
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"invalid code description: {e}") from None
    if need_crc and spec.crc is None:
        raise ConfigError("this command needs a CRC (--crc or crc_hex in the config)")
    return spec


# ---------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _header(args, spec: CodeSpec | None, extra: dict) -> dict:
    run = {k: v for k, v in vars(args).items() if k not in ("config", "out", "threads")}
    return _jsonable({"command": args.command, "seed": args.seed,
                      "code": spec.to_dict() if spec is not None else None, "options": run, **extra})


def _emit(args, text: str) -> None:
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _write_json(args, header: dict, payload: dict) -> None:
    _emit(args, json.dumps({"config": header, **_jsonable(payload)}, indent=2, sort_keys=True) + "\n")


def _write_csv(args, header: dict, columns: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(f"# seed: {header['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    _emit(args, buf.getvalue())


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _check_finite(values, what: str) -> None:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericFailure(f"non-finite values in {what}")


# ---------------------------------------------------------------- commands

def cmd_crc_search(args) -> int:
    spec = resolve_spec(args).with_crc(None)
    if any(m < 0 for m in args.m):
        raise ConfigError("CRC degrees must be nonnegative")
    cache = dso.SpectrumCache(args.cache) if args.cache else None
    audit_dir = Path(args.audit_dir) if args.audit_dir else None
    rows, inconclusive = [], False
    for m in args.m:
        row = dso.dso_search(spec, m, args.d_tilde, cache)
        if cache is not None:
            cache.put_search(spec, row)
        audit_path = ""
        if audit_dir is not None:
            audit_dir.mkdir(parents=True, exist_ok=True)
            target = audit_dir / f"audit_{spec.mode}_m{m}.json"
            target.write_text(json.dumps(_jsonable(row.to_dict()), indent=2, sort_keys=True) + "\n")
            audit_path = str(target)
        inconclusive |= row.result.inconclusive
        rows.append([m, row.result.crc.hex, row.result.d_min, row.result.multiplicity,
                     row.wstar2, row.d_tilde, row.result.status, audit_path])
    _write_csv(args, _header(args, spec, {}),
               ["m", "hex", "d_min", "multiplicity", "wstar2", "d_tilde", "status", "audit_path"], rows)
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


def _d_tilde(args, spec: CodeSpec) -> int:
    if args.d_tilde is not None:
        if args.d_tilde < 2:
            raise ConfigError("--d-tilde must be at least 2")
        return args.d_tilde
    return dso.default_d_tilde(spec.with_crc(None), spec.m)


def cmd_spectrum(args) -> int:
    spec = resolve_spec(args)
    D = _d_tilde(args, spec)
    higher = dso.distance_spectrum(dso._higher_rate(spec.with_crc(None), spec.m), None, D, args.method)
    payload = {"d_tilde": D, "higher": higher.to_dict(),
               "higher_d_min": higher.d_min}
    if spec.crc is not None:
        lower = dso.distance_spectrum(spec, spec.crc, D, args.method, args.bit_order)
        payload.update({"lower": lower.to_dict(), "d_min": lower.d_min,
                        "multiplicity": lower[lower.d_min] if lower.d_min is not None else 0})
    _write_json(args, _header(args, spec, {}), payload)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = resolve_spec(args, need_crc=True)
    try:
        plan = sim.TrialPlan(spec, snr_db=args.snr, max_list=args.psi, target_ue=args.target_ue,
                             max_trials=args.max_trials, seed=args.seed, mode=args.sim_mode,
                             eta=args.eta, chunk=args.chunk, random_message=args.random_message,
                             workers=args.threads)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    runner = {sim.CHANNEL: sim.run_channel, sim.FIXED_NORM: sim.run_fixed_norm,
              sim.ORIGIN: sim.run_origin}[args.sim_mode]
    report = runner(plan)
    out = report.to_dict()
    out.pop("plan")
    _write_json(args, _header(args, spec, {"plan": plan.to_dict()}), out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    spec = resolve_spec(args, need_crc=True)
    D = _d_tilde(args, spec)
    higher = dso._higher_rate(spec.with_crc(None), spec.m)
    # the truncated sums run over d <= D, so count one weight further
    B = dso.distance_spectrum(higher, None, D + 1)
    C = dso.distance_spectrum(spec, spec.crc, D + 1)
    full = dso.product_trellis_spectrum(spec, spec.crc, spec.n + 1, exact=False)
    n = k = None
    if not args.no_finite_length:
        n, k = spec.n, spec.k
    curves = bounds.bound_curves(args.snr, B, C, spec.m, D, n, k)
    curves["union"] = bounds.BoundCurve(
        "UNION", np.asarray(args.snr, dtype=float),
        np.array([bounds.union_bound(full, bounds.amplitude(db)) for db in args.snr]))
    cols = ["union", "tub", "nn_pe1", "nack1", "rcu", "mc"]
    rows = []
    for i, db in enumerate(args.snr):
        rows.append([float(db)] + [float(curves[c].values[i]) if c in curves else "" for c in cols])
    _check_finite([curves[c].values for c in curves], "bound curves")
    _write_csv(args, _header(args, spec, {"d_tilde": D}), ["snr_db"] + cols, rows)
    return EXIT_OK


def cmd_listrank(args) -> int:
    spec = resolve_spec(args, need_crc=True)
    if min(args.eta, default=0) <= 0:
        raise ConfigError("--eta values must be positive")
    if args.l_bar is not None:
        l_bar = args.l_bar
    else:
        origin = sim.run_origin(sim.TrialPlan(spec, max_trials=args.origin_trials, seed=args.seed,
                                              mode=sim.ORIGIN, chunk=args.chunk, workers=args.threads))
        l_bar = origin.points[0].estimates()["mean_rank"]
    plan = sim.TrialPlan(spec, max_trials=args.trials, seed=args.seed, mode=sim.FIXED_NORM,
                         eta=args.eta, chunk=args.chunk, workers=args.threads)
    report = sim.run_fixed_norm(plan)
    est = [p.estimates() for p in report.points]
    model = listrank.RankModel(l_bar, spec.n, spec.k, spec.m, np.array(args.eta),
                               np.array([e["p_ue"] for e in est]), np.array([e["mean_rank"] for e in est]))
    parametric = model.parametric_table()
    try:
        onions = {mu: model.onion_table(mu) for mu in args.mu}
    except ValueError as e:
        raise ConfigError(str(e)) from None
    rows = []
    for i, eta in enumerate(args.eta):
        rows.append([float(eta), float(model.rank_eta[i]), float(parametric[i])]
                    + [float(onions[mu][i]) for mu in args.mu])
    _check_finite([r[1:] for r in rows], "list-rank table")
    cols = ["eta", "simulated_rank", "parametric"] + [f"onion_mu{mu}" for mu in args.mu]
    _write_csv(args, _header(args, spec, {"l_bar": l_bar}), cols, rows)
    return EXIT_OK


def cmd_complexity(args) -> int:
    spec = resolve_spec(args)
    rows = []
    for el in args.el:
        try:
            b = complexity.breakdown(spec.mode, spec.k, spec.m, spec.nu, el, args.ei, args.c1, args.c2)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        rows.append(["slvd", b.mode, b.k, b.m, b.nu, el, b.ei, "", b.c_ssv, b.c_trace, b.c_list,
                     b.c_total, b.normalized])
    for nu in args.wava_nu:
        total = complexity.c_wava(nu, spec.k, args.wava_iterations)
        rows.append(["wava", TB, spec.k, 0, nu, "", "", args.wava_iterations, "", "", "", total, ""])
    cols = ["decoder", "mode", "k", "m", "nu", "el", "ei", "iterations", "c_ssv", "c_trace",
            "c_list", "c_total", "normalized"]
    _write_csv(args, _header(args, spec, {}), cols, rows)
    return EXIT_OK


COMMANDS = {
    "crc-search": cmd_crc_search,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "listrank": cmd_listrank,
    "complexity": cmd_complexity,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, FloatingPointError, ZeroDivisionError, OverflowError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
