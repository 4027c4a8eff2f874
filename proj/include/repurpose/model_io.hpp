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

#pragma once

#include <filesystem>

#include "repurpose/model.hpp"

namespace repurpose {

// RPM v1: a directory holding manifest.json plus one raw little-endian f32
// file per tensor. Values are rounded to f32 on save.
inline constexpr int kModelFormatVersion = 1;

SequentialModel load_model(const std::filesystem::path& dir);
void save_model(const SequentialModel& model, const std::filesystem::path& dir);

// Raw tensor file helpers, exposed for tests and tooling.
std::vector<double> read_f32_file(const std::filesystem::path& file, std::size_t expected_count);
void write_f32_file(const std::filesystem::path& file, std::span<const double> values);

}  // namespace repurpose
