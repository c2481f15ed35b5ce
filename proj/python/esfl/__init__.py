# Copyright 2026 The ESFL Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Split federated learning latency model, optimizer and simulator."""

import json

from . import _core
from ._core import Error, allocate_server_compute, builtin_architectures, shannon_rate
from ._core import split_equivalence

__all__ = [
    "Error",
    "allocate_server_compute",
    "architecture",
    "builtin_architectures",
    "converge",
    "optimize",
    "shannon_rate",
    "simulate",
    "split_equivalence",
]


def architecture(ref):
    """Builtin profile name or profile file path, as a dict."""
    return json.loads(_core.architecture_json(ref))


def simulate(config=None):
    """Runs a simulation; config uses the same keys as the CLI config file."""
    return json.loads(_core.simulate_json(json.dumps(config or {})))


def optimize(config):
    return json.loads(_core.optimize_json(json.dumps(config)))


def converge(config=None):
    return json.loads(_core.converge_json(json.dumps(config or {})))
