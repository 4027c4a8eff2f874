/*
 * Copyright 2026 The repurpose Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <sstream>

#include "repurpose/error.hpp"
#include "repurpose/simulator.hpp"
#include "test_support.hpp"

using namespace repurpose;
using namespace repurpose::sim;
using repurpose::testing::TempDir;

TEST_CASE("communication volume per node") {
  CHECK(theoretical_comm_per_node(8192, 2, 0.0, 4) == 16384.0);
  CHECK(theoretical_comm_per_node(8192, 1, 0.0, 4) == 0.0);
  CHECK(theoretical_comm_per_node(8192, 8, 0.99999, 4) < 1.0);
  CHECK(theoretical_comm_per_node(8192, 32, 0.0, 4) / theoretical_comm_per_node(8192, 2, 0.0, 4) == 1.9375);
  double prev = 0.0;
  for (std::size_t p = 2; p <= 32; ++p) {
    const double d = theoretical_comm_per_node(8192, p, 0.0, 4);
    CHECK(d > prev);
    CHECK(d <= 8192.0 * 4);
    prev = d;
    for (double s : kSparsityFlavors) {
      CHECK(theoretical_comm_per_node(8192, p, s, 4) == doctest::Approx(d * (1.0 - s)).epsilon(1e-15));
    }
  }
}

TEST_CASE("single node timing") {
  const PlatformConfig dc = datacenter();
  const SimReport r = simulate(dc, Workload{5, 1024, 4, 0.0, 1});
  CHECK(r.comm_total == 0.0);
  CHECK(r.compute_total == doctest::Approx(2.0 * 1024 * 1024 * 5 / dc.effective_ops()));
  CHECK(r.layers.size() == 5);
  CHECK(r.total == r.compute_total + r.comm_total);
}

TEST_CASE("compute per node decreases with node count") {
  for (double s : {0.0, 0.5, 0.9}) {
    double prev = INFINITY;
    for (std::size_t p = 1; p <= 32; ++p) {
      const double ops = ops_per_node(8192, p, s);
      CHECK(ops < prev);
      prev = ops;
    }
  }
}

TEST_CASE("flavor ordering on both platforms") {
  for (const PlatformConfig& platform : {datacenter(), edge()}) {
    for (std::size_t p = 2; p <= 32; ++p) {
      double prev = simulate(platform, Workload{5, 8192, 4, 0.0, p}).total;
      for (double s : kSparsityFlavors) {
        const double t = simulate(platform, Workload{5, 8192, 4, s, p}).total;
        CHECK(t < prev);
        prev = t;
      }
    }
  }
}

TEST_CASE("edge spends a larger share of time communicating") {
  const SimReport dc = simulate(datacenter(), Workload{5, 8192, 4, 0.9, 8});
  const SimReport ed = simulate(edge(), Workload{5, 8192, 4, 0.9, 8});
  CHECK(ed.comm_share() > dc.comm_share());
}

TEST_CASE("shared medium congestion") {
  PlatformConfig full = edge();
  full.topology = Topology::kFullBisection;
  const PlatformConfig shared = edge();
  double prev_gap = -1.0;
  for (std::size_t p = 2; p <= 32; ++p) {
    const Workload w{5, 8192, 4, 0.5, p};
    const double gap = simulate(shared, w).comm_total - simulate(full, w).comm_total;
    CHECK(gap >= 0.0);
    CHECK(gap >= prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("memory limit") {
  CHECK_THROWS_AS(simulate(edge(), Workload{5, 8192, 4, 0.0, 1}), InfeasibleError);
  const auto rows = speedup_report(datacenter(), 65536, {0.9}, {2, 16, 32});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].skipped == std::vector<std::size_t>{2, 16});
  CHECK(rows[0].points == 1);
}

TEST_CASE("speedup report") {
  std::vector<std::size_t> nodes;
  for (std::size_t p = 2; p <= 32; ++p) nodes.push_back(p);
  const auto rows = speedup_report(datacenter(), 8192, {0.0, 0.5, 0.75, 0.9, 0.99}, nodes);
  CHECK(rows[0].compute_speedup == 1.0);
  CHECK(rows[0].comm_speedup == 1.0);
  CHECK(rows[0].total_speedup == 1.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].compute_speedup > rows[i - 1].compute_speedup);
    CHECK(rows[i].comm_speedup > rows[i - 1].comm_speedup);
    CHECK(rows[i].total_speedup > rows[i - 1].total_speedup);
  }
  std::ostringstream csv;
  write_speedup_csv(csv, 8192, rows);
  CHECK(csv.str().rfind("N,flavor,compute_speedup,comm_speedup,total_speedup,comm_share,points\n", 0) == 0);
}

TEST_CASE("reports are pure functions of their inputs") {
  const Workload w{5, 4096, 4, 0.75, 6};
  const SimReport a = simulate(edge(), w);
  const SimReport b = simulate(edge(), w);
  CHECK(a.total == b.total);
  CHECK(report_json(edge(), w, a) == report_json(edge(), w, b));
  std::ostringstream csv;
  write_report_csv(csv, w, a);
  std::string header;
  std::istringstream lines(csv.str());
  std::getline(lines, header);
  CHECK(header == "N,P,flavor,layer,compute_s,comm_s,total_s");
}

TEST_CASE("platform files") {
  TempDir dir("platform");
  save_platform(edge(), dir.path() / "edge.json");
  const PlatformConfig back = load_platform(dir.path() / "edge.json");
  CHECK(back.peak_ops == edge().peak_ops);
  CHECK(back.topology == Topology::kSharedMedium);
  CHECK(platform_by_name((dir.path() / "edge.json").string()).link_latency == edge().link_latency);
  CHECK(platform_by_name("datacenter").memory_bytes == datacenter().memory_bytes);
  CHECK_THROWS_AS(platform_by_name("mainframe"), FormatError);
  PlatformConfig broken = datacenter();
  broken.efficiency = 0.0;
  CHECK_THROWS_AS(broken.validate(), DimensionError);
  CHECK_THROWS_AS(simulate(datacenter(), Workload{5, 1024, 4, 1.0, 2}), DimensionError);
}

TEST_CASE("naive averaging accuracy") {
  CHECK(naive_average_accuracy(1.0, 6) == 1.0);
  CHECK(naive_average_accuracy(0.0, 1) == doctest::Approx(1.0 / 9.0));
  CHECK(naive_average_accuracy(0.98, 6) == doctest::Approx((1.0 + 8.0 * std::pow(0.98, 6)) / 9.0));
  CHECK(naive_average_accuracy(0.98, 6) < 0.90);
}
