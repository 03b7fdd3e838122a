"""``nsdiag`` command line: gen | besov | quantities | verify | simulate.

Exit codes: 0 success (or every selected check passed), 1 computational or
check failure, 2 usage error.  Every report carries the digest of the
invocation's configuration and the toolkit version, so identical
invocations write byte-identical reports.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import suites
from .fileio import file_digest, read_field, read_record, write_field, write_record
from .generators import SCALAR_KINDS, VECTOR_KINDS, CFLError, FieldSpec, SimSpec, generate, simulate
from .grid import ScalarField, VectorField, set_threads
from .heat_besov import besov_norm
from .quantities import scan_radii
from .report import TOOLKIT_VERSION, summary_csv, to_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str, count: int | None = None) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {text!r}")
    return vals


def _point(text):
    return _floats(text, 3)


def _cap(text):
    name, sep, val = text.partition("=")
    if not sep or name not in suites.SUITES:
        raise argparse.ArgumentTypeError(f"expected SUITE=VALUE with SUITE in {', '.join(suites.SUITES)}")
    try:
        return name, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cap value must be a number, got {val!r}")


def config_digest(args: argparse.Namespace, inputs=()) -> str:
    """Digest of the parsed options plus the contents of every input file.

    The output location is left out, so rerunning into another path
    reproduces the same report bytes.
    """
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "output")}
    h = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode())
    for p in inputs:
        h.update(file_digest(p).encode())
    return h.hexdigest()[:16]


def _meta(args, inputs=()) -> dict:
    return {"config_digest": config_digest(args, inputs), "toolkit_version": TOOLKIT_VERSION}


def _need_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _need_parent(path) -> Path:
    p = Path(path)
    if not p.parent.is_dir():
        raise UsageError(f"output directory does not exist: {p.parent}")
    return p


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args) -> int:
    out = _need_parent(args.output)
    spec = FieldSpec(args.kind, amplitude=args.amplitude, length_scale=args.length_scale, seed=args.seed,
                     n=args.n, box_length=args.L, center=args.center, envelope=args.envelope)
    f = generate(spec)
    if isinstance(f, ScalarField):
        # scalar kinds are written zero-mean, the form the Besov norm expects
        f = f.with_values(f.values - f.values.mean())
    write_field(out, f)
    return EXIT_OK


def cmd_besov(args) -> int:
    src = _need_file(args.field)
    if args.output:
        _need_parent(args.output)
    f = read_field(src)
    vals = f.values
    mean = vals.mean(axis=(-3, -2, -1))
    if np.any(np.abs(mean) > 1e-12 * max(float(np.abs(vals).max()), 1e-300)) and not args.allow_mean:
        print(f"error: field has nonzero mean {np.max(np.abs(mean)):.3g}; pass --allow-mean to remove it",
              file=sys.stderr)
        return EXIT_FAIL
    est = besov_norm(f, t_min=args.t_min, t_max=args.t_max, points_per_decade=args.per_decade,
                     refine=not args.no_refine)
    _emit(est.to_json(**_meta(args, [src])) + "\n", args.output)
    return EXIT_OK


def cmd_quantities(args) -> int:
    src = _need_file(args.record)
    if args.output:
        _need_parent(args.output)
    if args.radii is not None:
        radii = args.radii
    else:
        radii = tuple(args.r_max * 0.5**k for k in range(args.halvings + 1))
    if any(not r > 0 for r in radii):
        raise UsageError("radii must be positive")
    rec = read_record(src)
    scan = scan_radii(rec, args.x0, args.t0, radii, with_pressure=not args.no_pressure)
    meta = _meta(args, [src])
    header = f"# config_digest={meta['config_digest']} toolkit_version={meta['toolkit_version']}\n"
    _emit(header + scan.to_csv(), args.output)
    for r, msg in scan.errors.items():
        print(f"r={r:g}: {msg}", file=sys.stderr)
    return EXIT_FAIL if scan.errors and not args.keep_going else EXIT_OK


def cmd_verify(args) -> int:
    outdir = Path(args.output) if args.output else None
    if outdir is not None and not outdir.is_dir():
        raise UsageError(f"output directory does not exist: {outdir}")
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    caps = dict(args.cap or [])
    meta = _meta(args)
    reports = []
    for name in names:
        for rep in suites.run_suite(name, quick=args.quick, caps=caps):
            reports.append(rep)
            if outdir is not None:
                (outdir / f"{rep.name}.json").write_text(rep.to_json(suite=name, **meta) + "\n")
    csv = f"# config_digest={meta['config_digest']} toolkit_version={meta['toolkit_version']}\n"
    csv += summary_csv(reports)
    if outdir is not None:
        (outdir / "summary.csv").write_text(csv)
    sys.stdout.write(csv)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_simulate(args) -> int:
    out = _need_parent(args.output)
    inputs = []
    if args.spec:
        src = _need_file(args.spec)
        inputs.append(src)
        spec = SimSpec.from_text(src.read_text())
    else:
        src = _need_file(args.init)
        inputs.append(src)
        v = read_field(src)
        if not isinstance(v, VectorField):
            raise UsageError("initial field must have three components")
        if args.dt is None or args.steps is None:
            raise UsageError("--dt and --steps are required with --init")
        spec = SimSpec(v, dt=args.dt, steps=args.steps, save_every=args.save_every, nu=args.nu)
    try:
        rec = simulate(spec)
    except CFLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    write_record(out, rec)
    meta = {**_meta(args, inputs), **rec.metadata, "snapshots": len(rec), "t_end": float(rec.times[-1]),
            "record_digest": file_digest(out)}
    Path(str(out) + ".json").write_text(to_json(meta) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="FFT worker count (default: NSDIAG_THREADS, else all cores)")
    p = argparse.ArgumentParser(prog="nsdiag", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a synthetic field (F3B1)")
    g.add_argument("--kind", required=True, type=lambda k: k.replace("-", "_"),
                   choices=VECTOR_KINDS + SCALAR_KINDS)
    g.add_argument("--n", type=int, default=64)
    g.add_argument("--L", type=float, default=2 * math.pi)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--length-scale", type=float, default=None)
    g.add_argument("--center", type=_point, default=None)
    g.add_argument("--envelope", type=float, default=None)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("besov", parents=[common], help="heat-flow Besov norm of a field (JSON)")
    b.add_argument("field")
    b.add_argument("--allow-mean", action="store_true", help="accept a nonzero mean and remove it")
    b.add_argument("--per-decade", type=int, default=8)
    b.add_argument("--t-min", type=float, default=None)
    b.add_argument("--t-max", type=float, default=None)
    b.add_argument("--no-refine", action="store_true")
    b.add_argument("-o", "--output", default=None)
    b.set_defaults(func=cmd_besov)

    q = sub.add_parser("quantities", parents=[common], help="A, E, C, D scan over radii (CSV)")
    q.add_argument("record")
    q.add_argument("--x0", type=_point, required=True)
    q.add_argument("--t0", type=float, required=True)
    grp = q.add_mutually_exclusive_group(required=True)
    grp.add_argument("--radii", type=_floats)
    grp.add_argument("--r-max", type=float)
    q.add_argument("--halvings", type=int, default=4, help="with --r-max: radii r_max / 2^k, k = 0..halvings")
    q.add_argument("--no-pressure", action="store_true", help="skip D")
    q.add_argument("--keep-going", action="store_true", help="exit 0 even when some radii are invalid")
    q.add_argument("-o", "--output", default=None)
    q.set_defaults(func=cmd_quantities)

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("suite", choices=suites.SUITES + ("all",))
    v.add_argument("--quick", action="store_true", help="smaller families, same tolerances")
    v.add_argument("--cap", type=_cap, action="append", metavar="SUITE=VALUE")
    v.add_argument("-o", "--output", default=None, help="directory for per-check JSON and summary.csv")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common], help="pseudospectral run to an ST31 record")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--init", help="initial velocity (F3B1, three components)")
    src.add_argument("--spec", help="key = value simulation spec file")
    s.add_argument("--nu", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--save-every", type=int, default=1)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_threads(getattr(args, "threads", None))
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        set_threads(None)


if __name__ == "__main__":
    sys.exit(main())
