"""Artifact format: cell formatting, CSV round trips, payload extraction,
and the JSON run summary schema."""

import json

import jsonschema
import numpy as np
import pytest

from randcurv.reports import (
    RUN_SCHEMA,
    RunRecord,
    format_cell,
    payload_lines,
    read_csv,
    write_csv,
    write_run_json,
)


class TestFormatCell:
    def test_floats_full_precision(self):
        x = 0.1234567890123456789
        assert format_cell(x) == repr(x)
        assert float(format_cell(x)) == x

    def test_numpy_scalars_are_plain(self):
        assert format_cell(np.float64(1.5)) == "1.5"

    def test_none_bool_int(self):
        assert format_cell(None) == ""
        assert format_cell(True) == "true"
        assert format_cell(False) == "false"
        assert format_cell(7) == "7"

    def test_strings_lose_separators(self):
        assert format_cell("a, b\nc") == "a; b c"


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        meta = {"config_hash": "ab" * 8, "sigma": 1.2345678901234567}
        header = ["a", "value", "note"]
        rows = [[0.1, 1e-300, "ok"], [0.2, None, ""]]
        write_csv(path, meta, header, rows)
        got_meta, got_header, got_rows = read_csv(path)
        assert got_meta["config_hash"] == "ab" * 8
        assert float(got_meta["sigma"]) == 1.2345678901234567
        assert got_header == header
        assert float(got_rows[0][1]) == 1e-300
        assert got_rows[1][1] == ""

    def test_width_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="width"):
            write_csv(tmp_path / "t.csv", {}, ["a", "b"], [[1.0]])

    def test_payload_excludes_metadata(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, {"k": "v"}, ["a"], [[1.0]])
        lines = payload_lines(path)
        assert lines == ["a", "1.0"]


class TestRunJson:
    def test_schema_validates(self, tmp_path):
        record = RunRecord(
            command="p2",
            config_hash="0123456789abcdef",
            version="0.1.0",
            timestamp="2026-01-01T00:00:00+00:00",
            config_text="command=p2\nseed=0",
            artifacts=("runs/p2_x.csv",),
            rows=({"a": 0.4, "estimate": 0.1, "warnings": "", "flag": True, "gap": None},),
        )
        path = write_run_json(tmp_path / "run.json", record)
        doc = json.loads(open(path).read())
        jsonschema.validate(doc, RUN_SCHEMA)
        assert doc["rows"][0]["a"] == 0.4

    def test_extra_top_level_key_fails_schema(self):
        doc = {
            "command": "p2", "config_hash": "0" * 16, "version": "x",
            "timestamp": "t", "config": "c", "artifacts": [], "rows": [],
            "surprise": 1,
        }
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(doc, RUN_SCHEMA)
