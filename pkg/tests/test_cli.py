"""Command line front end: exit codes, report files, determinism."""

import csv
import json

import numpy as np
import pytest

from tracecontracts.basis import save_calibration
from tracecontracts.cli import main
from tracecontracts.contracts import default_contract_text
from tracecontracts.fixtures import bridge_fixture, calibration_cases, stress_track, worked_trace
from tracecontracts.tracefile import TraceFile, load_trace, save_trace


H = 0.02

WORKED_CONTRACT = """\
# per-clause radii chosen for the worked trace reading
set tolerance 0.08
set silence_radius 0.04
frame onset_guard : ref_onset -> N[0.06] pred_onset @ ref_onset
frame offset_guard : ref_offset -> N[0.08] pred_offset @ ref_offset
frame missing_guard : ref_active -> N[0.08] pred_active @ ref_active
frame spurious_guard : pred_active -> N[0.08] ref_active @ pred_active
frame silence_guard : pred_active -> N[0.04] ref_active @ pred_active
event duration_guard : duration_within @ matched_pairs
event fragmentation_guard : singly_covered @ reference_intervals
"""


@pytest.fixture
def worked_files(tmp_path):
    contract_path = tmp_path / "worked.contract"
    contract_path.write_text(WORKED_CONTRACT)
    ref, pred, h = worked_trace()
    trace = TraceFile("worked", h, classes={"speech": (ref, pred)}, union=(ref, pred))
    trace_path = tmp_path / "worked.json"
    save_trace(trace, trace_path)
    return contract_path, trace_path


def read_report(path):
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
        assert first.startswith("# manifest=")
        return list(csv.DictReader(handle))


class TestCheck:
    def test_valid_contract_exits_zero(self, tmp_path, capsys):
        path = tmp_path / "default.contract"
        path.write_text(default_contract_text(0.04))
        assert main(["check", str(path)]) == 0
        out = capsys.readouterr().out
        assert "7 clauses parsed" in out
        assert "lookahead" in out

    def test_misspelled_operator_exits_two_with_caret(self, tmp_path, capsys):
        path = tmp_path / "bad.contract"
        path.write_text("set tolerance 0.04\nframe x : a - > b @ a\n")
        assert main(["check", str(path)]) == 2
        err = capsys.readouterr().err
        assert "^" in err
        caret_line = [l for l in err.splitlines() if l.strip() == "^"][0]
        source_line = [l for l in err.splitlines() if "a - > b" in l][0]
        assert source_line[caret_line.index("^")] == "-"

    def test_unknown_atoms_pass_check(self, tmp_path):
        path = tmp_path / "unknown.contract"
        path.write_text("set tolerance 0.04\nframe x : nonexistent_atom @ nonexistent_atom\n")
        assert main(["check", str(path)]) == 0


class TestMonitor:
    def test_worked_trace_rows(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        out = tmp_path / "out"
        assert main(["monitor", str(contract_path), str(trace_path), "--out", str(out)]) == 0
        rows = read_report(out / "guard.csv")
        by_name = {row["clause_name"]: row for row in rows if row["class"] == "union"}
        assert float(by_name["onset_guard"]["score"]) == 1.0
        assert float(by_name["offset_guard"]["score"]) == 0.0
        assert float(by_name["duration_guard"]["score"]) == 0.0
        assert float(by_name["silence_guard"]["score"]) < 1.0
        # guard row order equals contract source order
        assert [row["clause_name"] for row in rows] == [
            "onset_guard",
            "offset_guard",
            "missing_guard",
            "spurious_guard",
            "silence_guard",
            "duration_guard",
            "fragmentation_guard",
        ]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["run_id"]
        assert manifest["settings"]["matcher"] == "greedy"

    def test_identical_masks_all_ones(self, tmp_path):
        contract_path = tmp_path / "c.contract"
        contract_path.write_text(default_contract_text(0.04))
        ref, _, h = worked_trace()
        save_trace(TraceFile("perfect", h, union=(ref, ref)), tmp_path / "t.json")
        out = tmp_path / "out"
        assert main(["monitor", str(contract_path), str(tmp_path / "t.json"), "--out", str(out)]) == 0
        rows = read_report(out / "guard.csv")
        assert all(float(row["score"]) == 1.0 for row in rows)

    def test_reruns_are_byte_identical(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        first, second = tmp_path / "r1", tmp_path / "r2"
        for out in (first, second):
            assert (
                main(
                    ["monitor", str(contract_path), str(trace_path), "--out", str(out), "--classes"]
                )
                == 0
            )
        for name in ("guard.csv", "witness.csv", "manifest.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_class_rows_include_macro(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        out = tmp_path / "out"
        assert (
            main(["monitor", str(contract_path), str(trace_path), "--out", str(out), "--classes"])
            == 0
        )
        rows = read_report(out / "guard.csv")
        classes = {row["class"] for row in rows}
        assert classes == {"union", "speech", "macro"}

    def test_unknown_atom_exits_four(self, tmp_path):
        contract_path = tmp_path / "c.contract"
        contract_path.write_text(
            "set tolerance 0.04\nframe x : made_up_atom @ made_up_atom\n"
        )
        ref, pred, h = worked_trace()
        save_trace(TraceFile("t", h, union=(ref, pred)), tmp_path / "t.json")
        assert (
            main(
                ["monitor", str(contract_path), str(tmp_path / "t.json"), "--out", str(tmp_path / "o")]
            )
            == 4
        )

    def test_bad_trace_exits_three(self, worked_files, tmp_path):
        contract_path, _ = worked_files
        bad = tmp_path / "bad.json"
        bad.write_text('{"frame_step": 0.02, "union": {"ref": "01", "pred": "0102"}}')
        assert main(["monitor", str(contract_path), str(bad), "--out", str(tmp_path / "o")]) == 3

    def test_jobs_flag_keeps_row_order(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        ref, pred, h = worked_trace()
        second = tmp_path / "second.json"
        save_trace(TraceFile("zz_second", h, union=(pred, ref)), second)
        solo = tmp_path / "solo"
        multi = tmp_path / "multi"
        for out, jobs in ((solo, "1"), (multi, "3")):
            assert (
                main(
                    [
                        "monitor",
                        str(contract_path),
                        str(trace_path),
                        str(second),
                        "--out",
                        str(out),
                        "--jobs",
                        jobs,
                    ]
                )
                == 0
            )
        assert (solo / "guard.csv").read_bytes() == (multi / "guard.csv").read_bytes()


class TestSweep:
    def test_default_grid_rows_and_radius_change(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        out = tmp_path / "sweep"
        assert main(["sweep", str(contract_path), str(trace_path), "--out", str(out)]) == 0
        rows = read_report(out / "sweep.csv")
        tolerances = sorted({row["tolerance_ms"] for row in rows}, key=float)
        assert tolerances == ["20", "40", "80", "120", "160"]
        onset_formulas = {
            row["tolerance_ms"]: row["formula"]
            for row in rows
            if row["clause_name"] == "onset_guard"
        }
        assert len(set(onset_formulas.values())) == 5  # reparsed per tolerance
        assert "N[0.015]" in onset_formulas["20"]  # 0.06 s radius scaled by 20/80
        summary = read_report(out / "sweep_summary.csv")
        assert len(summary) == 1

    def test_flat_sweep_for_identical_masks(self, tmp_path):
        contract_path = tmp_path / "c.contract"
        contract_path.write_text(default_contract_text(0.04))
        ref, _, h = worked_trace()
        save_trace(TraceFile("perfect", h, union=(ref, ref)), tmp_path / "t.json")
        out = tmp_path / "sweep"
        assert main(["sweep", str(contract_path), str(tmp_path / "t.json"), "--out", str(out)]) == 0
        rows = read_report(out / "sweep.csv")
        means = [row for row in rows if row["clause_name"] == "mean_logic"]
        assert all(float(row["score"]) == 1.0 for row in means)

    def test_descending_grid_rejected(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        code = main(
            [
                "sweep",
                str(contract_path),
                str(trace_path),
                "--out",
                str(tmp_path / "s"),
                "--tolerances",
                "80,40",
            ]
        )
        assert code == 2


class TestMatchAudit:
    def _save_case(self, case, path):
        save_trace(
            TraceFile(case.case_id, case.frame_step, union=(case.ref_mask, case.pred_mask)),
            path,
        )

    def test_bridge_case_changed_with_half_f1_shift(self, tmp_path):
        case = bridge_fixture()
        path = tmp_path / "bridge.json"
        self._save_case(case, path)
        out = tmp_path / "audit"
        assert (
            main(
                [
                    "match-audit",
                    str(path),
                    "--out",
                    str(out),
                    "--epsilon-ms",
                    str(case.epsilon * 1000.0),
                ]
            )
            == 0
        )
        (row,) = read_report(out / "match_audit.csv")
        assert row["changed"] == "true"
        assert int(row["greedy_matches"]) == 1
        assert int(row["exact_matches"]) == 2
        assert float(row["boundary_f1_delta"]) == pytest.approx(0.5)

    def test_nominal_and_split_unchanged(self, tmp_path):
        cases = [c for c in stress_track() if c.pattern in ("nominal", "split")]
        paths = []
        for case in cases:
            path = tmp_path / f"{case.case_id}.json"
            self._save_case(case, path)
            paths.append(str(path))
        out = tmp_path / "audit"
        assert main(["match-audit", *paths, "--out", str(out), "--epsilon-ms", "100"]) == 0
        rows = read_report(out / "match_audit.csv")
        assert len(rows) == len(cases)
        for row in rows:
            assert row["changed"] == "false"
            assert float(row["boundary_f1_delta"]) == 0.0

    def test_empty_predictions_have_no_deltas(self, tmp_path):
        ref, _, h = worked_trace()
        save_trace(TraceFile("empty", h, union=(ref, np.zeros_like(ref))), tmp_path / "t.json")
        out = tmp_path / "audit"
        assert main(["match-audit", str(tmp_path / "t.json"), "--out", str(out)]) == 0
        (row,) = read_report(out / "match_audit.csv")
        assert row["changed"] == "false"
        assert int(row["greedy_matches"]) == 0

    def test_strict_bound_exits_five(self, tmp_path):
        h = 0.02
        n = 4000
        ref = np.zeros(n, dtype=bool)
        for k in range(30):
            ref[k * 120 : k * 120 + 40] = True
        save_trace(TraceFile("big", h, union=(ref, ref)), tmp_path / "big.json")
        code = main(
            [
                "match-audit",
                str(tmp_path / "big.json"),
                "--out",
                str(tmp_path / "a"),
                "--strict-bound",
            ]
        )
        assert code == 5
        # without the flag the row is flagged, not fatal
        assert (
            main(["match-audit", str(tmp_path / "big.json"), "--out", str(tmp_path / "b")]) == 0
        )
        (row,) = read_report(tmp_path / "b" / "match_audit.csv")
        assert row["note"] == "bound_exceeded"


class TestSelect:
    def test_nine_pathology_selection_report(self, tmp_path, capsys):
        contract_path = tmp_path / "basis.contract"
        contract_path.write_text(default_contract_text(0.04))
        calibration_path = tmp_path / "calibration.json"
        save_calibration(calibration_cases(), calibration_path)
        out = tmp_path / "sel"
        assert (
            main(["select", str(contract_path), str(calibration_path), "--out", str(out)]) == 0
        )
        printed = capsys.readouterr().out
        assert "selected contract:" in printed
        assert "separation certificate:" in printed
        selection_rows = read_report(out / "selection.csv")
        assert len(selection_rows) == 7
        retained = [row for row in selection_rows if row["retained"] == "true"]
        assert len(retained) == 7
        selected = [row for row in selection_rows if row["selected"] == "true"]
        assert 0 < len(selected) <= 7
        certificate_rows = read_report(out / "certificate.csv")
        assert len(certificate_rows) == 23  # strict risk pairs among 3/4/5 ranks

    def test_empty_calibration_is_vacuously_separating(self, tmp_path, capsys):
        contract_path = tmp_path / "basis.contract"
        contract_path.write_text(default_contract_text(0.04))
        calibration_path = tmp_path / "cal.json"
        calibration_path.write_text("[]")
        assert main(["select", str(contract_path), str(calibration_path)]) == 0
        printed = capsys.readouterr().out
        assert "selected contract: " in printed


class TestStream:
    def test_verdicts_match_offline_with_expected_lag(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        out = tmp_path / "stream"
        assert (
            main(
                [
                    "stream",
                    str(contract_path),
                    str(trace_path),
                    "--clause",
                    "silence_guard",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        rows = read_report(out / "stream.csv")
        trace = load_trace(trace_path)
        assert len(rows) == trace.frame_count
        assert all(row["equal"] == "true" for row in rows)
        # silence radius 0.04 at h=0.02: two frames of right context mid-trace
        mid = [row for row in rows if row["frame_index"] == "50"][0]
        assert int(mid["emitted_after_frames"]) == 53

    def test_zero_lookahead_clause_streams_immediately(self, tmp_path):
        contract_path = tmp_path / "c.contract"
        contract_path.write_text(
            "set tolerance 0.04\nframe plain : ref_active -> pred_active @ ref_active\n"
        )
        ref, pred, h = worked_trace()
        save_trace(TraceFile("t", h, union=(ref, pred)), tmp_path / "t.json")
        out = tmp_path / "stream"
        assert (
            main(
                [
                    "stream",
                    str(contract_path),
                    str(tmp_path / "t.json"),
                    "--clause",
                    "plain",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
        rows = read_report(out / "stream.csv")
        assert all(
            int(row["emitted_after_frames"]) == int(row["frame_index"]) + 1 for row in rows
        )

    def test_missing_clause_name_exits_two(self, worked_files, tmp_path):
        contract_path, trace_path = worked_files
        code = main(
            [
                "stream",
                str(contract_path),
                str(trace_path),
                "--clause",
                "nope",
                "--out",
                str(tmp_path / "s"),
            ]
        )
        assert code == 2
