# Copyright 2026 The Crashbench Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import pathlib
import shutil

import pytest

import crashbench

SOURCE = "int f(int x)\n{\n\treturn x;\n}\n\nint g(void)\n{\n\treturn 0;\n}\n"
ROOT = pathlib.Path(__file__).resolve().parents[2]
FIXTURES = ROOT / "tests" / "fixtures"


def edit(old, new):
    return crashbench.diff_trees({"a.c": SOURCE}, {"a.c": SOURCE.replace(old, new)})


def test_diff_round_trip():
    diff = edit("return x;", "return x + 1;")
    assert crashbench.patch_size(diff) == (2, 1)
    assert crashbench.normalize_diff(diff) == diff
    patched = crashbench.apply_patch({"a.c": SOURCE}, diff)
    assert patched["a.c"] == SOURCE.replace("return x;", "return x + 1;")


def test_modified_functions_and_iou():
    diff = edit("return x;", "return x + 1;")
    analysis = crashbench.modified_functions(diff, {"a.c": SOURCE})
    assert analysis["modified_files"] == ["a.c"]
    assert analysis["modified_functions"] == ["a.c::f"]
    other = edit("return 0;", "return 1;")
    assert crashbench.localization_iou(other, diff, {"a.c": SOURCE}) == (1.0, 0.0)
    assert crashbench.localization_iou(diff, diff, {"a.c": SOURCE}) == (1.0, 1.0)


def test_errors_carry_codes():
    with pytest.raises(crashbench.CrashbenchError) as info:
        crashbench.patch_size("@@ -1 +1 @@\n")
    assert info.value.code == "DiffSyntaxError"
    with pytest.raises(crashbench.CrashbenchError) as info:
        crashbench.relative_change(1.0, 0.0)
    assert info.value.code == "DivisionByZero"


def test_metrics():
    assert crashbench.pass_at_k_single(10, 3, 3) == pytest.approx(85 / 120)
    rows = {"a": [False, True, True], "b": [False, False, False]}
    assert crashbench.pass_at_k(rows, 1) == pytest.approx(100 / 3)
    assert crashbench.pass_at_k(rows, 2, estimator="first_k") == 50.0
    assert crashbench.mean_at_k(rows, 3) == pytest.approx(100 / 3)
    assert crashbench.round_half_even(0.125) == 0.12
    assert crashbench.round_half_even(crashbench.relative_change(78.44, 72.15)) == 8.72
    a = crashbench.judge_alignment(20, 51, 3, 5)
    assert crashbench.round_half_even(a["f1"]) == 83.33
    assert crashbench.sha256_hex(b"abc").startswith("ba7816bf")


def test_summarize_records():
    base = {"experiment": "e", "agent_name": "a", "compile_ok": True}
    records = [
        dict(base, bug_id="x", attempt_index=1, crash_resolved=True, equivalence="equivalent"),
        dict(base, bug_id="x", attempt_index=2, crash_resolved=False, equivalence="discrepant"),
        dict(base, bug_id="y", attempt_index=1, crash_resolved=True, equivalence="not_applicable"),
    ]
    report = crashbench.summarize(records)
    assert report["crr_percent"] == 75.0
    assert report["epr_percent"] == 50.0
    assert report["n_fixed_bugs"] == 1


def test_run_pipeline(tmp_path):
    tools = os.environ.get("CRASHBENCH_TOOLS_DIR")
    run_kernel = shutil.which("run_kernel", path=tools) if tools else None
    if not run_kernel:
        pytest.skip("CRASHBENCH_TOOLS_DIR with run_kernel is not set")
    cfg = {
        "experiment": "py",
        "reports": str(FIXTURES / "e2e" / "reports"),
        "trees": str(FIXTURES / "trees"),
        "run_kernel": run_kernel,
        "backend": {"kind": "sim", "scenarios": str(FIXTURES / "e2e" / "scenarios")},
        "seed": 3,
        "agents": [],
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    summary = crashbench.run_pipeline(str(path), stages=["ingest", "curate"])
    assert summary["experiment"] == "py"
    assert summary["stages"][1]["counts"]["admitted"] == 10
    with pytest.raises(crashbench.CrashbenchError) as info:
        crashbench.run_pipeline(str(path), stages=["deploy"])
    assert info.value.code == "ConfigError"
