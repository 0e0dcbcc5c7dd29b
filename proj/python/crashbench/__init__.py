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

"""Crash-resolution agent benchmark: patch analysis, metrics and pipeline."""

from crashbench._core import (
    CrashbenchError,
    apply_patch,
    diff_trees,
    judge_alignment,
    localization_iou,
    mean_at_k,
    modified_functions,
    normalize_diff,
    pass_at_k,
    pass_at_k_single,
    patch_size,
    relative_change,
    round_half_even,
    run_pipeline,
    sha256_hex,
    summarize,
)

__all__ = [
    "CrashbenchError",
    "apply_patch",
    "diff_trees",
    "judge_alignment",
    "localization_iou",
    "mean_at_k",
    "modified_functions",
    "normalize_diff",
    "pass_at_k",
    "pass_at_k_single",
    "patch_size",
    "relative_change",
    "round_half_even",
    "run_pipeline",
    "sha256_hex",
    "summarize",
]
