"""Command-line front end: ``intrinsic-lab {iv,h-theta,verify}``.

All logarithms are natural. Exit codes: 0 success, 1 a checked property
failed, 2 usage error, 3 the eps ladder did not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _kernels
from . import convex_bodies as cb
from . import intrinsic_entropy as ie
from . import logconcave as lc
from . import verification as vf

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3
OUTPUT_DIR_ENV = "INTRINSIC_LAB_OUTPUT_DIR"

# bodies for ``iv fit``; the fit only sees their oracle, the closed form is the check
FIT_ORACLES = {
    "cube2": lambda: cb.Cube(2, 1.0),
    "cube3": lambda: cb.Cube(3, 1.0),
    "disk": lambda: cb.Ball(2, 1.0),
    "ball3": lambda: cb.Ball(3, 1.0),
    "cross2": lambda: cb.Crosspolytope(2, 1.0),
    "cross3": lambda: cb.Crosspolytope(3, 1.0),
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _count(text: str) -> int:
    v = float(text)
    if v < 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return int(v)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def parse_grid(text: str) -> np.ndarray:
    """``a:b:k`` for ``k`` evenly spaced points, or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must look like a:b:k")
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        if k < 1:
            raise argparse.ArgumentTypeError("grid needs at least one point")
        g = np.linspace(a, b, k)
    else:
        g = np.asarray(_float_list(text))
    return np.unique(g)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file mirroring long flags")
    p.add_argument("--output", "-o", help="output file (default: stdout, or "
                   f"${OUTPUT_DIR_ENV}/<command>-<hash>.<ext>)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_count, default=1, help="worker threads")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="intrinsic-lab",
        description="Intrinsic volumes of typical sets and intrinsic entropy curves "
                    "(natural logarithms throughout).",
        epilog="exit codes: 0 ok, 1 property failure, 2 usage error, 3 non-convergence")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    iv = sub.add_parser("iv", parents=[common], help="intrinsic volumes of a body")
    iv.add_argument("kind", choices=("cube", "ball", "crosspolytope", "fit"))
    iv.add_argument("--n", type=_count)
    iv.add_argument("--A", type=_positive, default=1.0, help="cube side / crosspolytope scale")
    iv.add_argument("--r", type=_positive, default=1.0, help="ball radius")
    iv.add_argument("--oracle", choices=sorted(FIT_ORACLES), help="body for `fit`")
    iv.add_argument("--samples", type=_count, default=10**6)
    iv.add_argument("--t-grid", type=_float_list, default=None, help="tube radii for `fit`")
    iv.add_argument("--verify", action="store_true",
                    help="exit 1 if the sequence violates Alexandrov-Fenchel")

    ht = sub.add_parser("h-theta", parents=[common], help="intrinsic entropy curve")
    ht.add_argument("family", choices=("gaussian", "uniform", "laplace", "exponential",
                                       "file"))
    ht.add_argument("--nu", type=_positive, default=1.0)
    ht.add_argument("--A", type=_positive, default=1.0)
    ht.add_argument("--b", type=_positive, default=1.0)
    ht.add_argument("--lam", type=_positive, default=1.0)
    ht.add_argument("--density", help="density key = value file (family `file`)")
    ht.add_argument("--closed-form", action="store_true")
    ht.add_argument("--theta", type=parse_grid, default=None, help="a:b:k or list")
    ht.add_argument("--eps", type=_float_list, default=list(ie.DEFAULT_LADDER),
                    help="eps ladder, comma separated")
    ht.add_argument("--n-max", type=_count, default=400)
    ht.add_argument("--samples", type=_count, default=10**6)

    ve = sub.add_parser("verify", parents=[common], help="property suites")
    ve.add_argument("--suite", choices=sorted(vf.SUITES))
    ve.add_argument("--all", action="store_true")
    ve.add_argument("--family", choices=("cube", "ball", "crosspolytope", "appendix"))
    ve.add_argument("--A", type=_positive, default=1.0)
    ve.add_argument("--eps", type=_positive, default=0.1)
    ve.add_argument("--nu", type=_positive, default=1.0)
    ve.add_argument("--alpha", type=float, default=2.0)
    ve.add_argument("--delta", type=float, default=0.25)
    ve.add_argument("--nu1", type=_positive, default=1.0)
    ve.add_argument("--nu2", type=_positive, default=1.0)
    ve.add_argument("--up-to", type=_count, default=None)
    ve.add_argument("--samples", type=_count, default=10**6)
    return parser


def _config_tokens(path: str) -> list:
    tokens = []
    for key, value in lc.read_key_values(path).items():
        flag = "--" + key.strip().replace("_", "-")
        low = value.strip().lower()
        if low in ("true", "yes", "on"):
            tokens.append(flag)
        elif low in ("false", "no", "off", ""):
            continue
        else:
            tokens += [flag, value.strip()]
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    """Parse, splicing config-file flags in front of the command-line flags."""
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        try:
            tokens = _config_tokens(known.config)
        except (OSError, ValueError) as e:
            parser.error(f"cannot read config: {e}")
        for i, tok in enumerate(argv):
            if tok in ("iv", "h-theta", "verify"):
                # later flags win in argparse, so the command line overrides
                argv = argv[: i + 1] + tokens + argv[i + 1:]
                break
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# provenance and output


_RESULT_NEUTRAL = ("output", "config", "jobs")


def effective_config(args: argparse.Namespace) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in _RESULT_NEUTRAL:
            continue
        if isinstance(v, np.ndarray):
            v = [float(x) for x in v]
        cfg[k] = v
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _version(pkg: str) -> str:
    try:
        return metadata.version(pkg)
    except metadata.PackageNotFoundError:
        return "unknown"


def provenance(args: argparse.Namespace) -> dict:
    cfg = effective_config(args)
    return {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": args.seed,
        "versions": {"intrinsic_lab": __version__, "numpy": _version("numpy"),
                     "scipy": _version("scipy"), "numba": _version("numba")},
        "backend": _kernels.BACKEND,
        "log_base": "e",
    }


def _jsonable(x):
    return vf._jsonable(x)


def emit(args: argparse.Namespace, payload: dict, csv_text: Optional[str] = None) -> None:
    """Write JSON (or CSV with ``#`` provenance lines) to the chosen destination."""
    meta = provenance(args)
    fmt = args.format or ("csv" if csv_text is not None else "json")
    if fmt == "csv":
        if csv_text is None:
            raise UsageError("this command has no CSV output")
        head = [f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}" for k, v in meta.items()]
        text = "\n".join(head) + "\n" + csv_text
    else:
        text = json.dumps(_jsonable({"meta": meta, **payload}), sort_keys=True, indent=2) + "\n"
    dest = args.output
    if dest is None and os.environ.get(OUTPUT_DIR_ENV):
        dest = str(Path(os.environ[OUTPUT_DIR_ENV]) /
                   f"{args.command}-{meta['config_hash'][:12]}.{fmt}")
    if dest is None:
        sys.stdout.write(text)
        return
    Path(dest).parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands


def _af_payload(seq: cb.IntrinsicVolumeSequence, tol: float) -> dict:
    rep = cb.check_alexandrov_fenchel(seq, tol)
    m = rep.margins[np.isfinite(rep.margins)]
    return {"passed": rep.passed, "worst_index": rep.worst_index,
            "min_margin": float(m.min()) if m.size else None, "tolerance": tol}


def cmd_intrinsic_volumes(args: argparse.Namespace) -> int:
    if args.kind == "fit":
        if args.oracle is None:
            raise UsageError("`iv fit` needs --oracle")
        spec = FIT_ORACLES[args.oracle]()
        truth = cb.intrinsic_volumes(spec)
        rep = cb.steiner_fit(cb.as_oracle(spec), t_grid=args.t_grid, samples=args.samples,
                             seed=args.seed, jobs=args.jobs)
        est = rep.values
        exact = truth.values
        z = (est - exact) / np.where(rep.stderr > 0, rep.stderr, np.inf)
        rel = np.abs(est - exact) / exact
        payload = {"kind": "fit", "oracle": args.oracle, "n": spec.n,
                   "fit": rep.to_dict(), "closed_form": exact, "z": z,
                   "relative_error": rel, "within_3_sigma": bool(np.all(np.abs(z) <= 3)),
                   "within_2_percent": bool(np.all(rel <= 0.02))}
        seq = rep.estimates
        tol = 1e-9
    else:
        if args.n is None:
            raise UsageError(f"`iv {args.kind}` needs --n")
        spec = {"cube": lambda: cb.Cube(args.n, args.A), "ball": lambda: cb.Ball(args.n, args.r),
                "crosspolytope": lambda: cb.Crosspolytope(args.n, args.A)}[args.kind]()
        seq = cb.intrinsic_volumes(spec)
        payload = {"kind": args.kind, **seq.to_dict(), "values": seq.values}
        tol = 1e-9 if args.kind != "crosspolytope" else 1e-7
    code = EXIT_OK
    if args.verify:
        af = _af_payload(seq, tol)
        payload["alexandrov_fenchel"] = af
        code = EXIT_OK if af["passed"] else EXIT_FAIL
    emit(args, payload)
    return code


def _density(args: argparse.Namespace) -> lc.LogConcaveDensity:
    if args.family == "gaussian":
        return lc.gaussian(args.nu)
    if args.family == "uniform":
        return lc.uniform(args.A)
    if args.family == "laplace":
        return lc.laplace(args.b)
    if args.family == "exponential":
        return lc.exponential(args.lam)
    if not args.density:
        raise UsageError("family `file` needs --density")
    path = Path(args.density)
    return lc.density_from_config(lc.read_key_values(path), base_dir=path.parent)


def cmd_h_theta(args: argparse.Namespace) -> int:
    d = _density(args)
    theta = args.theta if args.theta is not None else np.linspace(0.0, 1.0, 101)
    if theta.size == 0 or theta[0] < 0 or theta[-1] > 1:
        raise UsageError("theta grid must lie in [0, 1]")
    if args.closed_form:
        if not ie.has_closed_form(d):
            raise UsageError(f"no closed form for {d.family}")
        curve = ie.closed_form_curve(d, theta)
    else:
        curve = ie.estimate_curve(d, theta, args.eps, args.n_max, args.seed, args.samples)
    emit(args, curve.to_dict(), curve.to_csv())
    if not curve.converged:
        print(f"eps ladder did not converge (max gap {curve.endpoints.get('max_gap')})",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.all:
        outcomes = vf.run_all(seed=args.seed, samples=args.samples, jobs=args.jobs)
    elif args.suite is None:
        raise UsageError("verify needs --suite or --all")
    else:
        fam_kw = {"A": args.A, "eps": args.eps, "nu": args.nu, "alpha": args.alpha,
                  "delta": args.delta}
        fams = (args.family,) if args.family else None
        s = args.suite
        if s == "superconv":
            kw = {"up_to": args.up_to or 40, **fam_kw}
            outcomes = vf.suite_superconv(fams or ("cube", "ball", "crosspolytope"), **kw)
        elif s == "alexandrov-fenchel":
            outcomes = vf.suite_alexandrov_fenchel(fams or ("cube", "ball", "crosspolytope"),
                                                   n_max=args.up_to or 400, **fam_kw)
        elif s == "lambda":
            outcomes = vf.suite_lambda(fams or ("cube", "ball", "crosspolytope", "appendix"),
                                       **fam_kw)
        elif s == "appendix-example":
            outcomes = vf.suite_appendix(args.alpha, args.delta)
        elif s == "epi":
            outcomes = vf.suite_epi(args.nu1, args.nu2)
        elif s in ("concatenation", "bloat"):
            outcomes = vf.SUITES[s](seed=args.seed)
        elif s == "loomis-whitney":
            outcomes = vf.suite_loomis_whitney(args.samples, args.seed)
        else:
            outcomes = vf.SUITES[s]()
    ok = all(o.passed for o in outcomes if not o.evidence_only)
    emit(args, {"all_passed": ok, "results": [o.to_dict() for o in outcomes]})
    for o in outcomes:
        tag = "INFO" if o.evidence_only else ("PASS" if o.passed else "FAIL")
        print(f"{tag} {o.name} margin={o.margin}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"iv": cmd_intrinsic_volumes, "h-theta": cmd_h_theta, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = parse_args(argv)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"intrinsic-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, lc.DensityError) as e:
        print(f"intrinsic-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"elapsed {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
