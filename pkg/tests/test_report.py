import json

import numpy as np
import pytest

from twistlab.checks import CheckResult
from twistlab.report import (ReportError, build_report, determinism_hash, dumps, exit_code, json_safe,
                             load_report, render_text, write_json)


def results():
    return [
        CheckResult("clifford.representation", "m=1,n=1", "pass", 1e-15, 1e-10),
        CheckResult("krein.adjoint-norm", "", "fail", 0.5, 1e-10, "broken"),
        CheckResult("morphism.metric-transport", "example", "pass", 0.0, 1e-12,
                    data={"source_metric": np.eye(2), "transported_metric": np.diag([1.0, -1.0]),
                          "interpretation": "signature change"}),
    ]


def test_json_safe():
    assert json_safe({"a": np.float64(np.inf), "b": np.arange(2), "c": 1 + 2j, "d": np.bool_(True)}) == \
        {"a": "inf", "b": [0, 1], "c": {"re": 1.0, "im": 2.0}, "d": True}


def test_records_sorted_and_summary():
    rep = build_report("verify", {"seed": 0}, reversed(results()))
    assert [r["key"] for r in rep["records"]] == sorted(r["key"] for r in rep["records"])
    assert rep["summary"]["pass"] == 2 and rep["summary"]["fail"] == 1 and rep["summary"]["total"] == 3
    assert exit_code(rep) == 1


def test_hash_excludes_timing():
    a = build_report("verify", {"seed": 0}, results(), {"wall_time_s": 1.0})
    b = build_report("verify", {"seed": 0}, results(), {"wall_time_s": 2.0})
    assert a["determinism_hash"] == b["determinism_hash"] == determinism_hash(a)
    c = build_report("verify", {"seed": 1}, results())
    assert c["determinism_hash"] != a["determinism_hash"]


def test_duplicate_keys():
    with pytest.raises(ReportError):
        build_report("verify", {}, results() + results()[:1])


def test_round_trip(tmp_path):
    rep = build_report("verify", {"seed": 3}, results(), {"wall_time_s": 0.1})
    path = tmp_path / "r.json"
    write_json(rep, path)
    assert dumps(load_report(path)) == path.read_text()


@pytest.mark.parametrize("payload, message", [
    ("[]", "JSON object"), ('{"records": []}', "lacks"),
    ('{"schema_version": 9, "records": [], "summary": {}}', "unsupported"),
    ('{"schema_version": 1, "records": [{"id": "nope", "status": "pass"}], "summary": {}}', "unknown check"),
    ("{", "not valid JSON"),
])
def test_load_rejects(tmp_path, payload, message):
    path = tmp_path / "r.json"
    path.write_text(payload)
    with pytest.raises(ReportError, match=message):
        load_report(path)


def test_render_failures_first_and_metric_table():
    text = render_text(build_report("verify", {"seed": 0}, results()))
    assert "3 checks, 1 failing" in text
    assert text.index("FAILURES (1)") < text.index("Checks by statement")
    assert "diag(+1, +1) -> diag(+1, -1)  signature change" in text
    assert "determinism hash" in text


def test_render_empty():
    assert "0 checks" in render_text(build_report("verify", {"seed": 0}, []))


def test_strict_json():
    rep = build_report("verify", {"seed": 0}, [CheckResult("krein.adjoint-norm", "", "fail", float("nan"), 1.0)])
    assert json.loads(dumps(rep))["records"][0]["residual"] == "nan"
