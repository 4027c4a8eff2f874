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

import math

import numpy as np
import pytest

import repurpose as rp


def test_column_cost_example():
    pruned, cost = rp.column_cost([3.0, 0.1], [1, 1], 0, rp.RepurposeConfig(0.0, 1.0))
    assert pruned == [3.0, 0.0]
    assert cost == pytest.approx(0.01, abs=1e-12)
    pruned, cost = rp.column_cost([3.0, 0.1], [1, 1], 1, rp.RepurposeConfig(0.0, 1.0))
    assert pruned == [3.0, 0.1]
    assert cost == pytest.approx(1.0, abs=1e-12)


def test_munkres_and_assignment():
    cols, total = rp.munkres(np.array([[4.0, 1.0], [2.0, 3.0]]))
    assert cols == [1, 0] and total == 3.0
    res = rp.assign_neurons(np.array([[0.0, 1.0], [1.0, 0.0]]), [1, 1], [1, 1], rp.RepurposeConfig(0, 1))
    assert res.permutation == [1, 0]
    assert res.total_cost == 0.0
    w = np.random.default_rng(0).normal(size=(5, 6))
    cfg = rp.RepurposeConfig(0.01, 0.3)
    fast = rp.assign_neurons(w, [3, 2], [3, 3], cfg)
    slow = rp.brute_force_assign(w, [3, 2], [3, 3], cfg)
    assert fast.total_cost == pytest.approx(slow.total_cost, abs=1e-9)


def test_counting():
    assert rp.count_assignments(6, [2, 2, 2]) == 90
    assert rp.count_assignments(64, [32, 32]) == math.comb(64, 32)
    exact = math.log(rp.count_assignments(64, [16] * 4))
    assert abs(exact - rp.asymptotic_log_estimate(64, 4)) <= math.log(64)


def test_mask_and_cross_edges():
    mask = rp.build_mask([2, 1], [1, 2])
    np.testing.assert_array_equal(mask, [[0, 1, 1], [0, 1, 1], [1, 0, 0]])
    assert rp.cross_edge_count(np.ones((3, 3)), [2, 1], [1, 2]) == 5


def test_model_from_numpy_matches_numpy_forward():
    rng = np.random.default_rng(1)
    w0, b0 = rng.normal(size=(4, 5)), rng.normal(size=5)
    w1, b1 = rng.normal(size=(5, 3)), rng.normal(size=3)
    model = rp.Model([(w0, b0, "relu"), (w1, b1, "identity")])
    x = rng.normal(size=(4, 7))
    want = w1.T @ np.maximum(w0.T @ x + b0[:, None], 0) + b1[:, None]
    np.testing.assert_allclose(model.forward(x), want, rtol=1e-12, atol=1e-12)
    assert model.widths == [4, 5, 3]


def test_repurpose_round_trip(tmp_path):
    model = rp.random_model([6, 8, 6, 4], seed=3)
    spec = rp.balanced_partition(model.widths, 2)
    exact = rp.repurpose(model, spec, rp.RepurposeConfig())
    x = np.random.default_rng(2).normal(size=(6, 5))
    np.testing.assert_allclose(exact.unpermute_output(exact.model.forward(x)), model.forward(x), rtol=1e-12)

    cfg = rp.calibrate_eta2(model, spec, 0.0, 0.05)
    rep = rp.repurpose(model, spec, cfg)
    assert all(d * d <= 0.05 for d in rep.per_layer_deviation)
    assert all(a <= b for a, b in zip(rep.cross_edges_after, rep.cross_edges_before))
    cert = rep.certify(model, x)
    assert cert["holds"] and cert["recursion_holds"]

    rep.save(tmp_path / "rep")
    back = rp.load_repurposed(tmp_path / "rep")
    assert back.permutations == rep.permutations
    assert back.certificate["bound"] == pytest.approx(cert["bound"])


def test_planted_recovery():
    spec = rp.balanced_partition([9, 12, 6], 3)
    _, scrambled = rp.planted_model(spec, seed=4)
    rep = rp.repurpose(scrambled, spec, rp.RepurposeConfig(0.0, 1.0))
    assert rep.cross_edges_after == [0, 0]
    assert rep.per_layer_deviation == [0.0, 0.0]
    base = rp.direct_sparsify(scrambled, spec, rp.RepurposeConfig(0.0, 1.0))
    assert base.cross_edges_after == [0, 0]
    assert max(base.per_layer_deviation) > 0


def test_distributed_forward():
    model = rp.random_model([8, 10, 6], seed=5)
    spec = rp.balanced_partition(model.widths, 2)
    rep = rp.repurpose(model, spec, rp.RepurposeConfig(0.0, 0.1))
    x = np.random.default_rng(3).normal(size=(8, 4))
    for threaded in (False, True):
        out = rp.distributed_forward(rp.shard(rep.model, spec), x, threaded=threaded)
        np.testing.assert_allclose(out["output"], rep.model.forward(x), rtol=1e-9)
        assert out["comm_csv"].startswith("layer,src,dst,values,bytes\n")
        assert all(r.bytes == 4 * r.values for r in out["comm"])


def test_simulator():
    assert rp.sim.comm_per_node(8192, 2, 0.0) == 16384.0
    assert rp.sim.comm_per_node(8192, 32, 0.0) / 16384.0 == 1.9375
    dc = rp.sim.simulate(rp.sim.datacenter(), 8192, 8, 0.9)
    edge = rp.sim.simulate(rp.sim.edge(), 8192, 8, 0.9)
    assert edge["comm_share"] > dc["comm_share"]
    assert dc["total_speedup"] > 1.0
    assert rp.sim.naive_average_accuracy(0.98, 6) < 0.9


def test_verify_suites():
    for suite in (rp.verify.thresholding, rp.verify.assignment, rp.verify.bound, rp.verify.exec):
        outcome = suite(10, seed=1)
        assert outcome["ok"], outcome["failure"]


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(rp.FormatError):
        rp.load_model(tmp_path / "nothing")
    with pytest.raises(rp.DimensionError):
        rp.PartitionSpec([[1, 2], [3]])
    model = rp.random_model([4, 4], seed=0)
    spec = rp.balanced_partition([4, 4], 2)
    with pytest.raises(rp.InfeasibleError):
        rp.calibrate_eta2(model, spec, 10.0, 1e-6)
    with pytest.raises(rp.Error):
        rp.RepurposeConfig(-1.0, 0.0)
