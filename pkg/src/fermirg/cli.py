"""Command-line driver: identity suites, bound campaigns and single RG steps.

Every command writes JSON lines, one record per check, followed by a
summary record.  The summary's ``timestamp`` field is the only part of a
report that depends on anything but the command line.

Exit codes: 0 all checks pass, 1 some check fails, 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .algebra import GrassmannElement, NormalizationError
from .gaussian import Covariance, minimal_integral_bound
from .instances import rng_for

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FAMILIES = ("l1_linf",)


class UsageError(Exception):
    """Bad flags or unreadable input; exit code 2."""


def _positive_float(s: str) -> float:
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return x


def _nonneg_int(s: str) -> int:
    n = int(s)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermirg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--scalar", choices=("exact", "float"), default="exact")
    common.add_argument("--family", default="l1_linf", help="seminorm family (only l1_linf)")
    common.add_argument("--jobs", type=_nonneg_int, default=1, help="worker processes")
    common.add_argument("--out", help="write the report here instead of stdout")

    s = sub.add_parser("identities", parents=[common], help="exact algebraic identity suite")
    s.add_argument("--dim", type=int, default=6, help="largest field dimension")
    s.add_argument("--count", type=_nonneg_int, default=100, help="instances per identity")
    s.add_argument("--covariance", help="JSON covariance used as the main covariance of every instance")
    s.add_argument("--only", nargs="+", metavar="NAME", help="run only these identities")

    s = sub.add_parser("bounds", parents=[common], help="norm bound campaign on gated random instances")
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--count", type=_nonneg_int, default=20, help="instances per bound certificate")
    s.add_argument("--derivative-count", type=_nonneg_int, default=10,
                   help="instances per derivative certificate")
    s.add_argument("--alpha", type=_positive_float, nargs="+", default=[2.0, 4.0])
    s.add_argument("--b", choices=("given", "fock"), default="given",
                   help="given: random covariances with the minimal integral bound; "
                        "fock: Gram covariances of Fock setups with b = 2S")
    s.add_argument("--suite", choices=("all", "bounds", "derivatives"), default="all")
    s.add_argument("--only", nargs="+", metavar="NAME", help="run only these certificates")

    s = sub.add_parser("rg-flow", parents=[common], help="one RG step on a user-supplied instance")
    s.add_argument("instance", help="JSON file with W, C, optional D and norm parameters")
    return p


# identities


def cmd_identities(args) -> tuple:
    from .identities import ALL_IDENTITIES, run_identities

    if args.scalar != "exact":
        raise UsageError("the identity suite compares exact scalars; --scalar float is not supported")
    names = args.only or list(ALL_IDENTITIES)
    unknown = [n for n in names if n not in ALL_IDENTITIES]
    if unknown:
        raise UsageError(f"unknown identities: {', '.join(unknown)}")
    cov = _load_covariance(args.covariance) if args.covariance else None
    if cov is not None and not cov.is_exact():
        raise UsageError("the covariance file must hold exact entries")
    if args.dim < 0:
        raise UsageError("--dim must be non-negative")
    records = run_identities(args.seed, args.dim, args.count, names, max(args.jobs, 1), cov)
    config = {"seed": args.seed, "dim": cov.dim if cov is not None else args.dim, "count": args.count,
              "scalar": args.scalar, "identities": names, "covariance": args.covariance}
    return records, config


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_covariance(path: str) -> Covariance:
    data = _load_json(path)
    try:
        return Covariance.from_json(data)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"invalid covariance in {path}: {exc}") from exc


# bounds


def _bound_task(task):
    name, kind, alpha, k, seed, dim, b_mode = task
    from .certify import BOUND_CERTIFICATES, DERIVATIVE_CERTIFICATES, run_certificate, set_b_mode

    set_b_mode(b_mode)
    fn = (BOUND_CERTIFICATES if kind == "bound" else DERIVATIVE_CERTIFICATES)[name]
    base = {"certificate": name, "kind": kind, "alpha": alpha, "instance": k}
    try:
        recs = run_certificate(fn, rng_for(seed, name, alpha, k), alpha, dim)
    except Exception as exc:  # reported as a failed check, never swallowed silently
        return [{**base, "name": name, "holds": False, "error": f"{type(exc).__name__}: {exc}"}]
    return [{**base, **r} for r in recs]


def cmd_bounds(args) -> tuple:
    from .certify import BOUND_CERTIFICATES, DERIVATIVE_CERTIFICATES

    if args.scalar != "exact":
        raise UsageError("bound certificates compute their left sides exactly; --scalar float is not supported")
    if args.dim < 0:
        raise UsageError("--dim must be non-negative")
    chosen = []
    if args.suite in ("all", "bounds"):
        chosen += [(n, "bound", args.count) for n in BOUND_CERTIFICATES]
    if args.suite in ("all", "derivatives"):
        chosen += [(n, "derivative", args.derivative_count) for n in DERIVATIVE_CERTIFICATES]
    if args.only:
        known = {n for n, _, _ in chosen}
        unknown = [n for n in args.only if n not in known]
        if unknown:
            raise UsageError(f"unknown certificates: {', '.join(unknown)}")
        chosen = [c for c in chosen if c[0] in args.only]
    tasks = []
    if args.dim > 0:
        for name, kind, count in chosen:
            for alpha in args.alpha:
                for k in range(count):
                    tasks.append((name, kind, alpha, k, args.seed, args.dim, args.b))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            batches = list(ex.map(_bound_task, tasks, chunksize=4))
    else:
        batches = [_bound_task(t) for t in tasks]
    records = [r for batch in batches for r in batch]
    config = {"seed": args.seed, "dim": args.dim, "count": args.count, "derivative_count": args.derivative_count,
              "alpha": args.alpha, "b": args.b, "family": args.family, "suite": args.suite,
              "only": args.only}
    return records, config


# rg-flow


def load_instance(data: dict, scalar: str = "exact") -> tuple:
    """(W, C, D or None, NormParams) from an instance dictionary."""
    from .certify import make_params

    try:
        W = GrassmannElement.from_json(data["W"])
        C = Covariance.from_json(data["C"])
        D = Covariance.from_json(data["D"]) if data.get("D") is not None else None
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"invalid instance: {exc}") from exc
    sig = W.sig
    if sig.copies != 1:
        raise UsageError("W must live on a single copy of the fields")
    if sig.v != C.dim or (D is not None and D.dim != C.dim):
        raise UsageError(f"dimension mismatch: W has {sig.v} fields, C is {C.dim}x{C.dim}"
                         + ("" if D is None else f", D is {D.dim}x{D.dim}"))
    if not W.is_even():
        raise UsageError("W must be even")
    params = data.get("params") or {}
    family = params.get("family", "l1_linf")
    if family not in FAMILIES:
        raise UsageError(f"unsupported seminorm family {family!r}")
    try:
        alpha = float(params.get("alpha", 2.0))
        b = params.get("b")
        if b is None:
            b = max(minimal_integral_bound(C), minimal_integral_bound(D) if D is not None else 0.0)
        c = params.get("c")
        p = make_params(C if D is None else C + D, alpha, b=float(b) if float(b) > 0 else 1.0,
                        c=None if c is None else float(c))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid params: {exc}") from exc
    if scalar == "float":
        W, C = W.to_float(), C.to_float()
        D = D.to_float() if D is not None else None
    return W, C, D, p


def rg_flow_records(W: GrassmannElement, C: Covariance, D, p) -> list:
    """W', Z, norm values and the bound verdict for one step."""
    from .certify import rg_map_check, rg_map_output_covariance_check
    from .gaussian import wick
    from .norms import big_n
    from .rg import partition_value, rg_step
    from .scalars import scalar_to_json

    Z = partition_value(wick(W, C if D is None else C + D), C)
    if Z == 0:
        return [{"kind": "error", "name": "normalization", "holds": False,
                 "message": "the Gaussian integral of exp(:W:) has zero constant part, so log is undefined"}]
    try:
        Wp = rg_step(W, C, D)
    except NormalizationError as exc:
        return [{"kind": "error", "name": "normalization", "holds": False, "message": str(exc)}]
    a = p.alpha
    out = [{"kind": "rg_flow", "name": "rg_step", "holds": True, "output_covariance": D is not None,
            "W_prime": Wp.to_json(), "Z": list(scalar_to_json(Z))}]
    norms = {"N_W": big_n(W, p).to_json(), "N_W_8alpha": big_n(W, p, 8 * a).to_json(),
             "N_W_32alpha": big_n(W, p, 32 * a).to_json(), "N_W_prime": big_n(Wp, p).to_json(),
             "N_difference": big_n(Wp - W, p).to_json()}
    out.append({"kind": "rg_flow", "name": "norms", "holds": True, "params": p.to_json(), **norms})
    rec = rg_map_check(W, C, p) if D is None else rg_map_output_covariance_check(W, C, D, p)
    out.append({"kind": "bound", **rec})
    return out


def cmd_rg_flow(args) -> tuple:
    if args.family not in FAMILIES:
        raise UsageError(f"unsupported seminorm family {args.family!r}")
    data = _load_json(args.instance)
    if not isinstance(data, dict):
        raise UsageError("instance file must hold a JSON object")
    W, C, D, p = load_instance(data, args.scalar)
    return rg_flow_records(W, C, D, p), {"instance": args.instance, "scalar": args.scalar}


# driver

COMMANDS = {"identities": cmd_identities, "bounds": cmd_bounds, "rg-flow": cmd_rg_flow}


def _summary(command: str, config: dict, records: list, started: float) -> dict:
    failures = sum(1 for r in records if not r.get("holds", False))
    skipped = sum(1 for r in records if r.get("precondition_skipped"))
    now = datetime.datetime.now(datetime.timezone.utc)
    return {"kind": "summary", "command": command, "config": config, "records": len(records),
            "failures": failures, "precondition_skipped": skipped,
            "status": "pass" if failures == 0 else "fail",
            "timestamp": {"finished": now.isoformat(), "elapsed_s": round(time.time() - started, 3)}}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    try:
        if args.family not in FAMILIES:
            raise UsageError(f"unsupported seminorm family {args.family!r}; available: {', '.join(FAMILIES)}")
        records, config = COMMANDS[args.command](args)
        summary = _summary(args.command, config, records, started)
        lines = [json.dumps(r, sort_keys=True) for r in records + [summary]]
        text = "\n".join(lines) + "\n"
        if args.out:
            try:
                with open(args.out, "w") as fh:
                    fh.write(text)
            except OSError as exc:
                raise UsageError(f"cannot write {args.out}: {exc.strerror}") from exc
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        print(f"fermirg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_PASS if summary["failures"] == 0 else EXIT_FAIL


def strip_timestamps(report: str) -> list:
    """Parsed records of a report with the timestamp removed, for comparing runs."""
    out = []
    for line in report.splitlines():
        if line.strip():
            r = json.loads(line)
            r.pop("timestamp", None)
            out.append(r)
    return out


__all__ = ["main", "build_parser", "load_instance", "rg_flow_records", "strip_timestamps",
           "EXIT_PASS", "EXIT_FAIL", "EXIT_USAGE"]
