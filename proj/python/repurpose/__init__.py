# Copyright 2026 The repurpose Authors.
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

"""Neuron reassignment and cross-worker pruning for partitioned inference."""

from ._core import (
    AssignmentResult,
    CommRecord,
    DimensionError,
    Error,
    FormatError,
    InfeasibleError,
    Model,
    PartitionSpec,
    RepurposeConfig,
    RepurposedModel,
    ShardedModel,
    UnsupportedError,
    assign_neurons,
    asymptotic_log_estimate,
    balanced_partition,
    brute_force_assign,
    build_mask,
    calibrate_eta2,
    column_cost,
    cost_matrix,
    count_assignments,
    cross_edge_count,
    deviation_bound,
    direct_sparsify,
    distributed_forward,
    load_model,
    load_partition,
    load_repurposed,
    munkres,
    planted_model,
    random_model,
    repurpose,
    shard,
    sim,
    verify,
)

__version__ = "0.1.0"
