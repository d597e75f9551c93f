# Copyright 2026 The fungp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Gaussian process regression and GP functional regression."""

import json as _json
import os as _os

from ._core import (
    GPFRModel,
    GPModel,
    MGPRModel,
    NSGPRModel,
    NumericalError,
    ValidationError,
    bspline_basis,
    cov_matrix,
    fit_gpfr,
    fit_gpr,
    fit_mgpr,
    fit_nsgpr,
    load_model,
    param_names,
    run,
)

__all__ = [
    "GPFRModel",
    "GPModel",
    "MGPRModel",
    "NSGPRModel",
    "NumericalError",
    "ValidationError",
    "bspline_basis",
    "cov_matrix",
    "fit_gpfr",
    "fit_gpr",
    "fit_mgpr",
    "fit_nsgpr",
    "load_model",
    "param_names",
    "run",
    "run_file",
    "load_model_file",
]


def run_file(path, output_dir=".", seed=None, threads=1):
    """Runs a JSON configuration file; returns the exit code."""
    with open(path, encoding="utf-8") as f:
        config = _json.load(f)
    return run(config, output_dir=_os.fspath(output_dir), seed=seed, threads=threads)


def load_model_file(path):
    """Reads a model archive written by the command-line tool or to_json()."""
    with open(path, encoding="utf-8") as f:
        return load_model(f.read())
