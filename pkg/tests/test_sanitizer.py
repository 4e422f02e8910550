"""Sanitizer units that need no compiler: the probe-input panel, outcome
recording, and record replay."""

import pytest

from driversmith.errors import BuildFailed
from driversmith.sanitizer import (
    EXEC_INPUTS,
    INPUT_FILE_LITERAL,
    ReplaySanitizer,
    SanitizeOutcome,
    StageResult,
    program_id_for,
)


class TestConstants:
    def test_exec_panel_covers_empty_ascii_binary_and_high_bytes(self):
        assert b"" in EXEC_INPUTS
        assert b"A" in EXEC_INPUTS
        assert bytes(range(16)) in EXEC_INPUTS
        assert b"\xff\xff\xff\xff" in EXEC_INPUTS
        assert len(EXEC_INPUTS) == 4

    def test_input_file_literal(self):
        assert INPUT_FILE_LITERAL == "input_file"


class TestProgramId:
    def test_stable_and_content_keyed(self):
        a = program_id_for("int main(void) { return 0; }")
        assert a == program_id_for("int main(void) { return 0; }")
        assert a != program_id_for("int main(void) { return 1; }")
        assert a.startswith("p") and len(a) == 13


def make_outcome(source="int x;"):
    return SanitizeOutcome(
        program_id=program_id_for(source),
        source=source,
        combination=("tc_create", "tc_feed"),
        passed=False,
        failed_stage="fuzzing",
        stages=[
            StageResult("syntax", True),
            StageResult("execution", True),
            StageResult("fuzzing", False, "heap-buffer-overflow"),
        ],
        branches={("tc_feed", 3), ("tc_create", 0)},
        corpus_blobs=[b"\x00\xff", b"TCF0"],
        crash_report="==ERROR: AddressSanitizer: heap-buffer-overflow",
        critical=("tc_create", "tc_feed"),
        density=2,
    )


class TestRecordReplay:
    def test_round_trip_preserves_verdict_and_evidence(self, tmp_path):
        outcome = make_outcome()
        path = ReplaySanitizer.record(outcome, tmp_path)
        assert path.exists()

        replayed = ReplaySanitizer(tmp_path).sanitize(
            outcome.source, outcome.combination, {"tc_create", "tc_feed"}
        )
        assert replayed.passed is False
        assert replayed.failed_stage == "fuzzing"
        assert replayed.branches == outcome.branches
        assert replayed.corpus_blobs == outcome.corpus_blobs
        assert replayed.crash_report == outcome.crash_report
        assert replayed.critical == outcome.critical
        assert replayed.density == 2
        assert [s.stage for s in replayed.stages] == ["syntax", "execution", "fuzzing"]
        assert replayed.program_id == outcome.program_id

    def test_unknown_program_raises_build_failed(self, tmp_path):
        with pytest.raises(BuildFailed, match="no recorded verdict"):
            ReplaySanitizer(tmp_path).sanitize("int y;", (), set())

    def test_records_are_deterministic_bytes(self, tmp_path):
        a = ReplaySanitizer.record(make_outcome(), tmp_path / "a")
        b = ReplaySanitizer.record(make_outcome(), tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()
        assert a.name == b.name
