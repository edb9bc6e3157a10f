// Copyright 2026 The morphsurf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace morph::text {

// Shortest round-trip-safe decimal form (17 significant digits).
std::string format_exact(double value);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Parses a full token as double; returns false on trailing garbage.
bool parse_double(std::string_view token, double& out);

std::string read_file(const std::string& path);
// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace morph::text
