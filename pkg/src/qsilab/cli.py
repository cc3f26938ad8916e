"""Command-line front end.

Subcommands: `test` (one identity test on an instance file), `protocol`
(exact or Monte Carlo protocol runs), `sweep` (CSV tables over parameter
grids), `bounds` (individual bound evaluations), and `selftest` (the full
criteria suite).

Output is CSV to --out or stdout; --json prints the run record instead.
Every run is replayable from its parameters and seed: identical command and
seed produce byte-identical CSV. Exit codes: 0 ok, 2 bad input, 3 size cap
exceeded, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import secrets
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from .bounds import (
    basel_asymptote,
    eq2_bound,
    q_bound_case,
    q_case_bound,
    q_value,
    two_block_soundness,
    two_sided_gap_check,
)
from .identity_tests import TestKind, equal_prob_formula, equal_prob_rational, run_circuit
from .instances import QsiInstance, load_instance, build_instance
from .limits import CapExceededError
from .permgroup import Partition
from .protocols import (
    mc_run,
    rcir_exact,
    rcir_exact_for_instance,
    rcir_sample,
    srs_closed_form,
    srs_exact,
    srs_sample,
)
from .selftest import run_all


class InputError(ValueError):
    """Malformed input file or inconsistent arguments (exit code 2)."""


@dataclass
class RunRecord:
    command: str
    params: dict[str, Any]
    outputs: dict[str, Any]
    seed: int | None
    wall_time_ms: int
    run_id: str


def _run_id(command: str, params: dict[str, Any], seed: int | None) -> str:
    payload = json.dumps([command, params, seed], sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _rat(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _csv_text(columns: list[str], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _load(path: str) -> QsiInstance:
    try:
        return load_instance(path)
    except CapExceededError:
        raise
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load instance {path}: {exc}") from exc


def _kind(name: str) -> TestKind:
    try:
        return TestKind(name)
    except ValueError as exc:
        raise InputError(f"unknown test kind {name!r}") from exc


# --- subcommand runners ------------------------------------------------------

def _cmd_test(args, seed: int) -> tuple[list[str], list[dict], dict]:
    kind = _kind(args.kind)
    inst = _load(args.instance)
    row: dict[str, Any] = {
        "kind": kind.value,
        "mode": args.mode,
        "n": inst.n,
        "dim": inst.dim,
    }
    if args.mode in ("circuit", "both"):
        row["p_circuit"] = run_circuit(kind, inst).p_equal
    if args.mode in ("formula", "both"):
        row["p_formula"] = equal_prob_formula(kind, inst)
    if args.mode == "both":
        row["abs_diff"] = abs(row["p_circuit"] - row["p_formula"])
    if inst.partition is not None:
        row["p_rational"] = _rat(equal_prob_rational(kind, inst))
    columns = ["kind", "mode", "n", "dim", "p_circuit", "p_formula",
               "p_rational", "abs_diff"]
    return columns, [row], dict(row)


def _protocol_trial(args, inst: QsiInstance | None) -> Callable:
    if args.protocol == "srs":
        m = args.m
        return lambda rng: srs_sample(inst, m, rng).verdict == "YES"
    return lambda rng: rcir_sample(inst, rng) == "YES"


def _cmd_protocol(args, seed: int) -> tuple[list[str], list[dict], dict]:
    inst: QsiInstance | None = None
    if args.instance is not None:
        inst = _load(args.instance)
    elif args.protocol == "rcir" and args.n is not None and args.r is not None:
        if not 1 <= args.r <= args.n - 1:
            raise InputError(f"need 1 <= r <= n-1, got n={args.n} r={args.r}")
        if not args.exact:
            inst = build_instance(
                Partition.of([list(range(1, args.r + 1)),
                              list(range(args.r + 1, args.n + 1))]),
                dim=2,
            )
    else:
        raise InputError("protocol needs --instance (or --n/--r for rcir)")
    if args.protocol == "srs" and args.m < 1:
        raise InputError("--m must be at least 1")

    row: dict[str, Any] = {
        "protocol": args.protocol,
        "n": inst.n if inst is not None else args.n,
        "r": args.r,
        "m": args.m if args.protocol == "srs" else None,
        "policy": args.policy if args.protocol == "srs" else None,
        "mode": "exact" if args.exact else "mc",
    }
    if args.exact:
        if args.protocol == "srs":
            value = srs_exact(inst, args.m, args.policy)
        elif inst is not None:
            value = rcir_exact_for_instance(inst)
        else:
            value = rcir_exact(args.n, args.r)
        row["value_rational"] = _rat(value)
        row["value_float"] = float(value)
    else:
        est = mc_run(_protocol_trial(args, inst), args.trials, seed)
        row.update(
            trials=est.trials,
            successes=est.successes,
            p_hat=est.p_hat,
            ci_lo=est.ci95[0],
            ci_hi=est.ci95[1],
        )
    columns = ["protocol", "n", "r", "m", "policy", "mode", "value_rational",
               "value_float", "trials", "successes", "p_hat", "ci_lo", "ci_hi"]
    return columns, [row], dict(row)


def _sweep_perm_soundness(args) -> tuple[list[str], list[dict]]:
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        for l in range(1, n):
            value = two_block_soundness(n, l).value
            rows.append({
                "n": n,
                "l": l,
                "soundness_rational": _rat(value),
                "soundness_float": float(value),
                "one_over_n_float": 1.0 / n,
            })
    columns = ["n", "l", "soundness_rational", "soundness_float", "one_over_n_float"]
    return columns, rows


def _sweep_rcir_vs_bound(args) -> tuple[list[str], list[dict]]:
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        for r in range(1, n // 2 + 1):
            exact = rcir_exact(n, r)
            bound = eq2_bound(n, r).value
            rows.append({
                "n": n,
                "r": r,
                "exact_rational": _rat(exact),
                "exact_float": float(exact),
                "bound_rational": _rat(bound),
                "bound_float": float(bound),
                "loose_float": 1.7 / n,
                "within_bound": exact <= bound,
            })
    columns = ["n", "r", "exact_rational", "exact_float", "bound_rational",
               "bound_float", "loose_float", "within_bound"]
    return columns, rows


def _sweep_srs_vs_m(args) -> tuple[list[str], list[dict]]:
    two_ident = build_instance(Partition.of([[1, 3], [2]]), dim=2)
    all_orth = build_instance(Partition.of([[1], [2], [3]]), dim=3)
    rows = []
    for m in range(1, args.m_max + 1):
        ti = srs_exact(two_ident, m)
        ao = srs_exact(all_orth, m)
        bound = Fraction(1, 3) + Fraction(1, 4 ** (m - 1))
        rows.append({
            "m": m,
            "two_identical_rational": _rat(ti),
            "two_identical_float": float(ti),
            "all_orthogonal_rational": _rat(ao),
            "all_orthogonal_float": float(ao),
            "bound_rational": _rat(bound),
            "bound_float": float(bound),
            "within_bound": ti <= bound and ao <= bound,
        })
    columns = ["m", "two_identical_rational", "two_identical_float",
               "all_orthogonal_rational", "all_orthogonal_float",
               "bound_rational", "bound_float", "within_bound"]
    return columns, rows


def _sweep_qbounds(args) -> tuple[list[str], list[dict]]:
    rows = []
    for n in range(max(args.n_min, 4), args.n_max + 1):
        for r in range(1, n // 2 + 1):
            for s in range(2, r + 1):
                if n % s or r % s:
                    continue
                value = q_value(n, r, s).value
                case = q_bound_case(n, r, s)
                case_bound = q_case_bound(n, r, s)
                rows.append({
                    "n": n,
                    "r": r,
                    "s": s,
                    "q_rational": _rat(value),
                    "q_float": float(value),
                    "case": case,
                    "case_bound_rational": _rat(case_bound.value) if case_bound else None,
                    "case_bound_float": case_bound.float_view if case_bound else None,
                    "holds": (value <= case_bound.value) if case_bound else None,
                })
    columns = ["n", "r", "s", "q_rational", "q_float", "case",
               "case_bound_rational", "case_bound_float", "holds"]
    return columns, rows


_SWEEPS = {
    "perm-soundness": _sweep_perm_soundness,
    "rcir-vs-bound": _sweep_rcir_vs_bound,
    "srs-vs-m": _sweep_srs_vs_m,
    "qbounds": _sweep_qbounds,
}


def _cmd_sweep(args, seed: int) -> tuple[list[str], list[dict], dict]:
    columns, rows = _SWEEPS[args.target](args)
    return columns, rows, {"rows": len(rows)}


def _cmd_bounds(args, seed: int) -> tuple[list[str], list[dict], dict]:
    which = args.which
    row: dict[str, Any]
    if which == "two-block":
        value = two_block_soundness(args.n, args.l).value
        row = {"bound": which, "n": args.n, "l": args.l,
               "value_rational": _rat(value), "value_float": float(value),
               "one_over_n_float": 1.0 / args.n}
    elif which == "q":
        value = q_value(args.n, args.r, args.s).value
        row = {"bound": which, "n": args.n, "r": args.r, "s": args.s,
               "value_rational": _rat(value), "value_float": float(value),
               "case": q_bound_case(args.n, args.r, args.s)}
    elif which == "eq2":
        value = eq2_bound(args.n, args.r).value
        row = {"bound": which, "n": args.n, "r": args.r,
               "value_rational": _rat(value), "value_float": float(value)}
    elif which == "basel":
        asym = basel_asymptote(args.n)
        row = {"bound": which, "n": args.n,
               "pi2_over_6n": asym.value, "loose_1_7_over_n": asym.loose}
    else:  # gap
        report = two_sided_gap_check()
        row = {"bound": which,
               "trace_dist": report.trace_dist,
               "completeness_error": report.completeness_error,
               "soundness_error": report.soundness_error,
               "error_sum": report.error_sum,
               "achieves_lower_bound": report.achieves_lower_bound}
    return list(row.keys()), [row], dict(row)


# --- wiring ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsilab",
        description="identity-testing lab: circuits, closed forms, protocols, bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", help="write CSV here (plus a JSON sidecar)")
        p.add_argument("--json", action="store_true", help="print the run record as JSON")
        p.add_argument("--seed", type=int, help="seed for anything random")

    p_test = sub.add_parser("test", help="run one identity test on an instance file")
    p_test.add_argument("--kind", required=True,
                        choices=[k.value for k in TestKind])
    p_test.add_argument("--instance", required=True, help="instance JSON file")
    p_test.add_argument("--mode", choices=["circuit", "formula", "both"],
                        default="both")
    common(p_test)

    p_proto = sub.add_parser("protocol", help="run a protocol exactly or by sampling")
    p_proto.add_argument("protocol", choices=["srs", "rcir"])
    p_proto.add_argument("--instance", help="instance JSON file")
    p_proto.add_argument("--n", type=int, help="cycle length (rcir without a file)")
    p_proto.add_argument("--r", type=int, help="distinguished block size (rcir)")
    p_proto.add_argument("--m", type=int, default=2, help="rounds (srs)")
    p_proto.add_argument("--policy", choices=["uniform", "canonical"],
                         default="uniform", help="pair re-choice policy (srs exact)")
    p_proto.add_argument("--exact", action="store_true", help="exact rational value")
    p_proto.add_argument("--trials", type=int, default=10_000)
    common(p_proto)

    p_sweep = sub.add_parser("sweep", help="tabulate a quantity over a grid")
    p_sweep.add_argument("target", choices=sorted(_SWEEPS))
    p_sweep.add_argument("--n-min", type=int, default=2)
    p_sweep.add_argument("--n-max", type=int, default=9)
    p_sweep.add_argument("--m-max", type=int, default=6)
    common(p_sweep)

    p_bounds = sub.add_parser("bounds", help="evaluate one analytic bound")
    p_bounds.add_argument("which", choices=["two-block", "q", "eq2", "basel", "gap"])
    p_bounds.add_argument("--n", type=int)
    p_bounds.add_argument("--l", type=int)
    p_bounds.add_argument("--r", type=int)
    p_bounds.add_argument("--s", type=int)
    common(p_bounds)

    p_self = sub.add_parser("selftest", help="run the full criteria suite")
    common(p_self)

    return parser


_RUNNERS = {
    "test": _cmd_test,
    "protocol": _cmd_protocol,
    "sweep": _cmd_sweep,
    "bounds": _cmd_bounds,
}


def _params_of(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"command", "out", "json", "seed"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def _emit(args, columns: list[str], rows: list[dict], record: RunRecord) -> None:
    for row in rows:
        row.setdefault("run_id", record.run_id)
        row.setdefault("seed", record.seed)
    columns = columns + ["run_id", "seed"]
    text = _csv_text(columns, rows)
    if args.out is not None:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        sidecar = out.with_suffix(".json")
        if sidecar == out:
            sidecar = out.with_name(out.name + ".record.json")
        sidecar.write_text(
            json.dumps({"record": asdict(record), "rows": rows}, indent=2, default=str)
            + "\n",
            encoding="utf-8",
        )
    if args.json:
        print(json.dumps(asdict(record), indent=2, default=str))
    elif args.out is None:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        return 0 if run_all() else 1

    seed = args.seed if args.seed is not None else secrets.randbits(32)
    params = _params_of(args)
    started = time.perf_counter()
    try:
        columns, rows, outputs = _RUNNERS[args.command](args, seed)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    wall_ms = int(round((time.perf_counter() - started) * 1000))
    record = RunRecord(
        command=args.command,
        params=params,
        outputs=outputs,
        seed=seed,
        wall_time_ms=wall_ms,
        run_id=_run_id(args.command, params, seed),
    )
    try:
        _emit(args, columns, rows, record)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
