"""Command line front end.

Subcommands: ``check`` validates a contract file, ``monitor`` evaluates
traces into guard/witness CSVs with a manifest, ``sweep`` re-monitors
under a tolerance grid, ``match-audit`` compares greedy and exact
interval matching, ``select`` runs risk-ordered contract selection, and
``stream`` replays one clause through the online monitor.

Flags take milliseconds; everything internal is seconds.  Outputs are
deterministic byte-for-byte for equal inputs and flags: every CSV starts
with a ``# manifest=<run id>`` comment line, where the run id is a hash
of the settings and input digests.  Exit codes: 0 success, 2 contract
error, 3 trace format error, 4 atom binding error, 5 audit bound
exceeded under ``--strict-bound``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .basis import basis_from_contract, load_calibration, observational_classes, retained_basis, select_contract
from .contracts import (
    Contract,
    ContractSyntaxError,
    FrameClause,
    MonitorResult,
    default_contract_text,
    load_contract,
    monitor,
    monitor_classes,
    soft_boundary,
    tolerance_sweep,
)
from .frames import UnknownAtomError, derive_edge_atoms, evaluate, lookahead
from .intervals import AuditBoundError, extract_intervals, matcher_audit
from .parser import format_formula, radius_sum, temporal_depth
from .streaming import StreamingMonitor
from .tracefile import TraceFormatError, canonical_json, load_trace, sha256_file, sha256_text

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_TRACE = 3
EXIT_ATOM = 4
EXIT_BOUND = 5


def _fmt_score(value: float) -> str:
    return f"{value:.6f}"


def _fmt_ms(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def _print_contract_error(path: str, error: ContractSyntaxError) -> None:
    print(f"{path}:{error.line_number}: error: {error.message}", file=sys.stderr)
    if error.line_text:
        print(f"  {error.line_text}", file=sys.stderr)
        if error.span is not None:
            print("  " + " " * error.span.start + "^", file=sys.stderr)


def _load_contract(path: str) -> Contract:
    try:
        return load_contract(path)
    except ContractSyntaxError as error:
        _print_contract_error(path, error)
        raise SystemExit(EXIT_CONTRACT) from None
    except OSError as error:
        print(f"cannot read contract {path}: {error}", file=sys.stderr)
        raise SystemExit(EXIT_CONTRACT) from None


def _load_traces(paths) -> list:
    traces = []
    for path in paths:
        try:
            traces.append((path, load_trace(path)))
        except TraceFormatError as error:
            print(f"trace error: {error}", file=sys.stderr)
            raise SystemExit(EXIT_TRACE) from None
        except OSError as error:
            print(f"cannot read trace {path}: {error}", file=sys.stderr)
            raise SystemExit(EXIT_TRACE) from None
    return traces


def _manifest(command: str, contract_text: str | None, settings: dict, inputs, flags: dict, stamp_time: bool) -> dict:
    manifest = {
        "tool": "tracecontracts",
        "version": __version__,
        "command": command,
        "contract_sha256": sha256_text(contract_text) if contract_text is not None else None,
        "settings": settings,
        "inputs": [
            {"path": os.path.basename(str(path)), "sha256": sha256_file(path)}
            for path in inputs
        ],
        "flags": flags,
    }
    manifest["run_id"] = sha256_text(canonical_json(manifest))[:16]
    manifest["generated_at"] = (
        datetime.now(timezone.utc).isoformat() if stamp_time else None
    )
    return manifest


def _write_manifest(out_dir: str, manifest: dict) -> None:
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_csv(path: str, run_id: str, header: list[str], rows: list[list[str]]) -> None:
    buffer = io.StringIO()
    buffer.write(f"# manifest={run_id}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(buffer.getvalue())


def _guard_rows(item_id: str, class_name: str, result: MonitorResult) -> list[list[str]]:
    rows = []
    for coord in result.guards:
        rows.append(
            [
                item_id,
                class_name,
                coord.name,
                _fmt_score(coord.score),
                str(coord.obligated),
                str(coord.satisfied),
                str(coord.violated),
                _fmt_ms(coord.witness_mean),
            ]
        )
    return rows


def _witness_row(item_id, class_name, result: MonitorResult, soft: float) -> list[str]:
    witness = result.witnesses
    diffs = witness.duration_abs_diffs
    duration_mae_ms = float(np.mean(diffs)) * 1000.0 if diffs else None
    extras = witness.fragmentation_extra_counts
    extra_mean = float(np.mean(extras)) if extras else None
    return [
        item_id,
        class_name,
        _fmt_ms(witness.onset_mae_ms),
        _fmt_ms(witness.offset_mae_ms),
        str(witness.onset_excluded),
        str(witness.offset_excluded),
        _fmt_ms(duration_mae_ms),
        "" if extra_mean is None else f"{extra_mean:.3f}",
        _fmt_score(soft),
    ]


GUARD_HEADER = [
    "item_id",
    "class",
    "clause_name",
    "score",
    "obligated",
    "satisfied",
    "violated",
    "witness_mean_ms",
]

WITNESS_HEADER = [
    "item_id",
    "class",
    "onset_mae_ms",
    "offset_mae_ms",
    "onset_excluded",
    "offset_excluded",
    "duration_mae_ms",
    "fragmentation_extra_mean",
    "soft_boundary",
]


def cmd_check(args) -> int:
    try:
        contract = load_contract(args.contract)
    except ContractSyntaxError as error:
        _print_contract_error(args.contract, error)
        return EXIT_CONTRACT
    except OSError as error:
        print(f"cannot read contract {args.contract}: {error}", file=sys.stderr)
        return EXIT_CONTRACT
    print(
        f"contract: tolerance={contract.tolerance}s silence_radius={contract.silence_radius}s "
        f"merge_gap={contract.merge_gap}s matcher={contract.matcher}"
    )
    for clause in contract.clauses:
        if isinstance(clause, FrameClause):
            formula = clause.formula
            print(
                f"frame {clause.name}: {format_formula(formula)} @ "
                f"{format_formula(clause.obligation)} "
                f"(depth={temporal_depth(formula)}, radius_sum={radius_sum(formula):.3f}s, "
                f"lookahead={lookahead(formula):.3f}s)"
            )
        else:
            params = " ".join(f"{k}={v}" for k, v in clause.params)
            suffix = f" {params}" if params else ""
            print(f"event {clause.name}: {clause.predicate} @ {clause.obligation}{suffix}")
    print(f"{len(contract.clauses)} clauses parsed")
    return EXIT_OK


def _monitor_one(contract: Contract, trace, classes: bool, soft_scale: float):
    ref, pred = trace.union_masks()
    union_result = monitor(contract, ref, pred, trace.frame_step)
    union_soft = soft_boundary(ref, pred, trace.frame_step, soft_scale)
    per_class = None
    if classes and trace.classes:
        per_class = monitor_classes(contract, trace.classes, trace.frame_step)
    return union_result, union_soft, per_class


def cmd_monitor(args) -> int:
    contract = _load_contract(args.contract)
    if args.matcher:
        contract = Contract(
            contract.tolerance,
            contract.silence_radius,
            contract.merge_gap,
            args.matcher,
            contract.clauses,
        )
    traces = _load_traces(args.traces)
    soft_scale = args.soft_scale / 1000.0
    os.makedirs(args.out, exist_ok=True)
    with open(args.contract, "r", encoding="utf-8") as handle:
        contract_text = handle.read()
    manifest = _manifest(
        "monitor",
        contract_text,
        {
            "tolerance": contract.tolerance,
            "silence_radius": contract.silence_radius,
            "merge_gap": contract.merge_gap,
            "matcher": contract.matcher,
            "soft_scale_ms": args.soft_scale,
        },
        [path for path, _ in traces],
        {"classes": bool(args.classes)},
        args.stamp_time,
    )

    def run(entry):
        _, trace = entry
        try:
            return _monitor_one(contract, trace, args.classes, soft_scale)
        except UnknownAtomError as error:
            raise SystemExit(EXIT_ATOM) from error

    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(run, traces))
        else:
            results = [run(entry) for entry in traces]
    except SystemExit as stop:
        if stop.code == EXIT_ATOM:
            print("atom binding error: formula references an atom the trace lacks", file=sys.stderr)
            return EXIT_ATOM
        raise
    guard_rows: list[list[str]] = []
    witness_rows: list[list[str]] = []
    for (path, trace), (union_result, union_soft, per_class) in zip(traces, results):
        guard_rows.extend(_guard_rows(trace.item_id, "union", union_result))
        witness_rows.append(_witness_row(trace.item_id, "union", union_result, union_soft))
        if per_class is not None:
            for class_name in sorted(per_class.per_class):
                result = per_class.per_class[class_name]
                ref, pred = trace.classes[class_name]
                guard_rows.extend(_guard_rows(trace.item_id, class_name, result))
                witness_rows.append(
                    _witness_row(
                        trace.item_id,
                        class_name,
                        result,
                        soft_boundary(ref, pred, trace.frame_step, soft_scale),
                    )
                )
            for coord in per_class.macro:
                guard_rows.append(
                    [
                        trace.item_id,
                        "macro",
                        coord.name,
                        _fmt_score(coord.score),
                        str(coord.obligated),
                        str(coord.satisfied),
                        str(coord.violated),
                        _fmt_ms(coord.witness_mean),
                    ]
                )
    run_id = manifest["run_id"]
    _write_csv(os.path.join(args.out, "guard.csv"), run_id, GUARD_HEADER, guard_rows)
    _write_csv(os.path.join(args.out, "witness.csv"), run_id, WITNESS_HEADER, witness_rows)
    _write_manifest(args.out, manifest)
    print(f"wrote {len(guard_rows)} guard rows for {len(traces)} trace(s) to {args.out}")
    return EXIT_OK


SWEEP_HEADER = [
    "tolerance_ms",
    "item_id",
    "class",
    "clause_name",
    "score",
    "obligated",
    "satisfied",
    "violated",
    "formula",
]


def cmd_sweep(args) -> int:
    contract = _load_contract(args.contract)
    traces = _load_traces(args.traces)
    tolerances_ms = [float(part) for part in args.tolerances.split(",")]
    if any(b <= a for a, b in zip(tolerances_ms, tolerances_ms[1:])):
        print("tolerances must be strictly ascending", file=sys.stderr)
        return EXIT_CONTRACT
    tolerances = [t / 1000.0 for t in tolerances_ms]
    os.makedirs(args.out, exist_ok=True)
    with open(args.contract, "r", encoding="utf-8") as handle:
        contract_text = handle.read()
    manifest = _manifest(
        "sweep",
        contract_text,
        {
            "tolerance": contract.tolerance,
            "silence_radius": contract.silence_radius,
            "merge_gap": contract.merge_gap,
            "matcher": contract.matcher,
            "tolerances_ms": tolerances_ms,
        },
        [path for path, _ in traces],
        {},
        args.stamp_time,
    )
    rows: list[list[str]] = []
    summary_rows: list[list[str]] = []
    for path, trace in traces:
        ref, pred = trace.union_masks()
        try:
            sweep = tolerance_sweep(contract, ref, pred, trace.frame_step, tolerances)
        except UnknownAtomError:
            print("atom binding error: formula references an atom the trace lacks", file=sys.stderr)
            return EXIT_ATOM
        for t_ms, row in zip(tolerances_ms, sweep.rows):
            formulas = row.formula_texts
            for coord in row.guards:
                rows.append(
                    [
                        f"{t_ms:g}",
                        trace.item_id,
                        "union",
                        coord.name,
                        _fmt_score(coord.score),
                        str(coord.obligated),
                        str(coord.satisfied),
                        str(coord.violated),
                        formulas.get(coord.name, ""),
                    ]
                )
            rows.append(
                [
                    f"{t_ms:g}",
                    trace.item_id,
                    "union",
                    "mean_logic",
                    _fmt_score(row.mean_logic),
                    "",
                    "",
                    "",
                    "",
                ]
            )
        summary_rows.append(
            [trace.item_id, "union", _fmt_score(sweep.integral), _fmt_score(sweep.span)]
        )
    run_id = manifest["run_id"]
    _write_csv(os.path.join(args.out, "sweep.csv"), run_id, SWEEP_HEADER, rows)
    _write_csv(
        os.path.join(args.out, "sweep_summary.csv"),
        run_id,
        ["item_id", "class", "integral", "span"],
        summary_rows,
    )
    _write_manifest(args.out, manifest)
    print(f"wrote sweep over {len(tolerances)} tolerances for {len(traces)} trace(s) to {args.out}")
    return EXIT_OK


AUDIT_HEADER = [
    "item_id",
    "epsilon_ms",
    "ref_count",
    "pred_count",
    "greedy_matches",
    "exact_matches",
    "changed",
    "greedy_boundary_f1",
    "exact_boundary_f1",
    "boundary_f1_delta",
    "duration_delta",
    "fragmentation_delta",
    "note",
]


def cmd_match_audit(args) -> int:
    traces = _load_traces(args.traces)
    epsilon = args.epsilon_ms / 1000.0
    os.makedirs(args.out, exist_ok=True)
    manifest = _manifest(
        "match-audit",
        None,
        {"epsilon_ms": args.epsilon_ms, "bound": args.bound},
        [path for path, _ in traces],
        {"strict_bound": bool(args.strict_bound)},
        args.stamp_time,
    )
    rows = []
    for path, trace in traces:
        ref, pred = trace.union_masks()
        refs = extract_intervals(ref, trace.frame_step)
        preds = extract_intervals(pred, trace.frame_step)
        try:
            audit = matcher_audit(refs, preds, epsilon, bound=args.bound)
        except AuditBoundError as error:
            if args.strict_bound:
                print(f"audit bound exceeded: {error}", file=sys.stderr)
                return EXIT_BOUND
            rows.append(
                [trace.item_id, f"{args.epsilon_ms:g}", str(len(refs)), str(len(preds))]
                + [""] * 8
                + ["bound_exceeded"]
            )
            continue
        rows.append(
            [
                trace.item_id,
                f"{args.epsilon_ms:g}",
                str(len(refs)),
                str(len(preds)),
                str(len(audit.greedy)),
                str(len(audit.exact)),
                "true" if audit.changed else "false",
                _fmt_score(audit.greedy_boundary_f1),
                _fmt_score(audit.exact_boundary_f1),
                _fmt_score(audit.boundary_f1_delta),
                _fmt_score(audit.duration_delta),
                _fmt_score(audit.fragmentation_delta),
                "",
            ]
        )
    run_id = manifest["run_id"]
    _write_csv(os.path.join(args.out, "match_audit.csv"), run_id, AUDIT_HEADER, rows)
    _write_manifest(args.out, manifest)
    print(f"wrote matcher audit for {len(traces)} trace(s) to {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    contract = _load_contract(args.basis)
    try:
        cases = load_calibration(args.calibration)
    except TraceFormatError as error:
        print(f"calibration error: {error}", file=sys.stderr)
        return EXIT_TRACE
    basis = basis_from_contract(contract)
    classes = observational_classes(basis, cases)
    retained = retained_basis(basis, cases)
    selection = select_contract(retained, cases)
    by_order = {clause.source_order: clause for clause in basis.clauses}
    print(f"calibration: {len(cases)} cases, {len(basis.clauses)} candidate clauses")
    print("observational classes:")
    for cls in classes:
        names = ", ".join(by_order[m].name for m in cls.members)
        tag = " (constant)" if cls.constant else ""
        print(f"  [{names}]{tag}")
    print("retained basis: " + ", ".join(c.name for c in retained.clauses))
    if not selection.feasible:
        low, high = selection.unseparated_pair
        print(f"infeasible: no clause separates {low!r} (lower risk) from {high!r}")
        return EXIT_OK
    print("selected contract: " + ", ".join(c.name for c in selection.selected))
    print("separation certificate:")
    for low, high, order in selection.certificate:
        print(f"  {low} < {high}: {by_order[order].name}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(args.basis, "r", encoding="utf-8") as handle:
            contract_text = handle.read()
        manifest = _manifest(
            "select",
            contract_text,
            {"tolerance": contract.tolerance, "matcher": contract.matcher},
            [args.basis, args.calibration],
            {},
            args.stamp_time,
        )
        run_id = manifest["run_id"]
        selected_orders = {c.source_order for c in selection.selected}
        retained_orders = {c.source_order for c in retained.clauses}
        representative = {}
        constant_orders = set()
        for cls in classes:
            for member in cls.members:
                representative[member] = cls.representative
                if cls.constant:
                    constant_orders.add(member)
        selection_rows = [
            [
                str(clause.source_order),
                clause.name,
                "frame" if isinstance(clause.clause, FrameClause) else "event",
                str(clause.cost),
                "true" if clause.source_order in constant_orders else "false",
                by_order[representative[clause.source_order]].name,
                "true" if clause.source_order in retained_orders else "false",
                "true" if clause.source_order in selected_orders else "false",
            ]
            for clause in basis.clauses
        ]
        _write_csv(
            os.path.join(args.out, "selection.csv"),
            run_id,
            ["source_order", "clause_name", "kind", "cost", "constant", "class_representative", "retained", "selected"],
            selection_rows,
        )
        certificate_rows = [
            [low, high, by_order[order].name] for low, high, order in selection.certificate
        ]
        _write_csv(
            os.path.join(args.out, "certificate.csv"),
            run_id,
            ["low_risk_case", "high_risk_case", "witnessing_clause"],
            certificate_rows,
        )
        _write_manifest(args.out, manifest)
    return EXIT_OK


STREAM_HEADER = ["frame_index", "emitted_after_frames", "verdict", "offline", "equal"]


def cmd_stream(args) -> int:
    contract = _load_contract(args.contract)
    traces = _load_traces([args.trace])
    _, trace = traces[0]
    clause = next(
        (
            c
            for c in contract.clauses
            if isinstance(c, FrameClause) and c.name == args.clause
        ),
        None,
    )
    if clause is None:
        names = ", ".join(c.name for c in contract.clauses if isinstance(c, FrameClause))
        print(f"no frame clause named {args.clause!r}; available: {names}", file=sys.stderr)
        return EXIT_CONTRACT
    ref, pred = trace.union_masks()
    env = derive_edge_atoms(ref, pred, trace.frame_step)
    try:
        offline = evaluate(clause.formula, env)
    except UnknownAtomError as error:
        print(f"atom binding error: {error}", file=sys.stderr)
        return EXIT_ATOM
    stream = StreamingMonitor(clause.formula, trace.frame_step)
    emissions: list[tuple[int, bool, int]] = []
    for step_index in range(env.frame_count):
        frame = {name: bool(values[step_index]) for name, values in env.atoms.items()}
        for index, verdict in stream.step(frame):
            emissions.append((index, verdict, step_index + 1))
    for index, verdict in stream.finalize():
        emissions.append((index, verdict, env.frame_count))
    rows = []
    all_equal = True
    for index, verdict, after in emissions:
        equal = bool(offline[index]) == verdict
        all_equal = all_equal and equal
        rows.append(
            [
                str(index),
                str(after),
                "1" if verdict else "0",
                "1" if offline[index] else "0",
                "true" if equal else "false",
            ]
        )
    os.makedirs(args.out, exist_ok=True)
    with open(args.contract, "r", encoding="utf-8") as handle:
        contract_text = handle.read()
    manifest = _manifest(
        "stream",
        contract_text,
        {"clause": args.clause, "lookahead_frames": stream.lookahead_frames},
        [args.trace],
        {},
        args.stamp_time,
    )
    _write_csv(os.path.join(args.out, "stream.csv"), manifest["run_id"], STREAM_HEADER, rows)
    _write_manifest(args.out, manifest)
    print(
        f"streamed {env.frame_count} frames, lookahead {stream.lookahead_frames} frames, "
        f"offline agreement: {'yes' if all_equal else 'NO'}"
    )
    return EXIT_OK if all_equal else 1


def cmd_init(args) -> int:
    text = default_contract_text(args.tolerance_ms / 1000.0)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"wrote default contract to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracecontracts",
        description="Boundary contract monitoring for finite binary traces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and describe a contract file")
    p_check.add_argument("contract")
    p_check.set_defaults(func=cmd_check)

    p_monitor = sub.add_parser("monitor", help="evaluate contract guards on trace files")
    p_monitor.add_argument("contract")
    p_monitor.add_argument("traces", nargs="+")
    p_monitor.add_argument("--out", required=True, help="output directory")
    p_monitor.add_argument("--matcher", choices=("greedy", "exact"), default=None)
    p_monitor.add_argument("--classes", action="store_true", help="also report per-class and macro rows")
    p_monitor.add_argument("--soft-scale", type=float, default=50.0, metavar="MS")
    p_monitor.add_argument("--jobs", type=int, default=1)
    p_monitor.add_argument("--stamp-time", action="store_true")
    p_monitor.set_defaults(func=cmd_monitor)

    p_sweep = sub.add_parser("sweep", help="re-monitor under a tolerance grid")
    p_sweep.add_argument("contract")
    p_sweep.add_argument("traces", nargs="+")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--tolerances", default="20,40,80,120,160", metavar="MS,MS,...")
    p_sweep.add_argument("--stamp-time", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_audit = sub.add_parser("match-audit", help="compare greedy and exact interval matching")
    p_audit.add_argument("traces", nargs="+")
    p_audit.add_argument("--out", required=True)
    p_audit.add_argument("--epsilon-ms", type=float, default=80.0)
    p_audit.add_argument("--bound", type=int, default=24)
    p_audit.add_argument("--strict-bound", action="store_true", help="exit 5 when the bound is exceeded")
    p_audit.add_argument("--stamp-time", action="store_true")
    p_audit.set_defaults(func=cmd_match_audit)

    p_select = sub.add_parser("select", help="risk-ordered contract selection")
    p_select.add_argument("basis", help="candidate basis contract file")
    p_select.add_argument("calibration", help="calibration set JSON")
    p_select.add_argument("--out", default=None)
    p_select.add_argument("--stamp-time", action="store_true")
    p_select.set_defaults(func=cmd_select)

    p_stream = sub.add_parser("stream", help="replay one frame clause through the online monitor")
    p_stream.add_argument("contract")
    p_stream.add_argument("trace")
    p_stream.add_argument("--clause", required=True)
    p_stream.add_argument("--out", required=True)
    p_stream.add_argument("--stamp-time", action="store_true")
    p_stream.set_defaults(func=cmd_stream)

    p_init = sub.add_parser("init", help="emit the default contract file")
    p_init.add_argument("--tolerance-ms", type=float, default=40.0)
    p_init.add_argument("--out", default=None)
    p_init.set_defaults(func=cmd_init)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as stop:
        return int(stop.code) if stop.code is not None else 0
    except UnknownAtomError as error:
        print(f"atom binding error: {error}", file=sys.stderr)
        return EXIT_ATOM
    except TraceFormatError as error:
        print(f"trace error: {error}", file=sys.stderr)
        return EXIT_TRACE


if __name__ == "__main__":
    sys.exit(main())
