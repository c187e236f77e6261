// Copyright 2026 The hsfuse Authors
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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsf {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
/// Throws DataError naming `what` on malformed input.
double parse_real(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);

/// Flat `key = value` document. Blank lines and `#` comments are skipped;
/// insertion order is preserved and a repeated key overwrites in place.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, std::string_view source = "");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  void set(std::string_view key, std::string value);
  bool erase(std::string_view key);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string to_string() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace hsf
