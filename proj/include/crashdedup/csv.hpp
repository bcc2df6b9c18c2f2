// Copyright 2026 The crashdedup Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRASHDEDUP_CSV_HPP_
#define CRASHDEDUP_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace crashdedup {

// Minimal RFC 4180 reading and writing: comma separated, double-quoted
// fields may hold commas and doubled quotes. No multi-line fields.
std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

// Rows of the file with the header row first; blank lines skipped.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace crashdedup

#endif  // CRASHDEDUP_CSV_HPP_
