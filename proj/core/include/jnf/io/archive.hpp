// Copyright 2026 The JNF Authors.
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

#ifndef JNF_IO_ARCHIVE_HPP_
#define JNF_IO_ARCHIVE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jnf/autodiff.hpp"

// On-disk formats shared by every module:
//  * binary arrays: raw little-endian row-major payloads, shape kept elsewhere;
//  * manifests: `key=value` text, one entry per line, keys sorted;
//  * parameter archives: one `params.bin` blob plus `params.txt` listing
//    `name rows cols offset` so that loading is bit-exact.
namespace jnflow::io {

namespace fs = std::filesystem;

/// Ordered key=value record.  Lines starting with '#' are comments.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::size_t value) { set(key, static_cast<long long>(value)); }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;
  static Manifest parse(const std::string& text);
  void save(const fs::path& path) const;
  static Manifest load(const fs::path& path);

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest round-tripping decimal representation of a double.
std::string format_double(double v);

void write_matrix(const fs::path& path, const Matrix& m);
Matrix read_matrix(const fs::path& path, Eigen::Index rows, Eigen::Index cols);
void write_ints(const fs::path& path, const std::vector<int>& values);
std::vector<int> read_ints(const fs::path& path, std::size_t count);

/// Stores the parameters under `dir` as params.bin + params.txt.
void save_parameters(const fs::path& dir, const std::vector<const ad::Parameter*>& params);
/// Loads into already-constructed parameters; names and shapes must match.
void load_parameters(const fs::path& dir, const std::vector<ad::Parameter*>& params);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace jnflow::io

#endif  // JNF_IO_ARCHIVE_HPP_
