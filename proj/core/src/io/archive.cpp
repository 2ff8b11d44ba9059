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

#include "jnf/io/archive.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <tuple>
#include <fstream>
#include <sstream>

#include "jnf/error.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace jnflow::io {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void Manifest::set(const std::string& key, double value) { entries_[key] = format_double(value); }

void Manifest::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }

const std::string& Manifest::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::io_error, "manifest has no key '" + key + "'");
  return it->second;
}

std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Manifest::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::io_error, "manifest key '" + key + "' is not a number: " + s);
  }
  return v;
}

long long Manifest::get_int(const std::string& key) const {
  const std::string& s = get(key);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::io_error, "manifest key '" + key + "' is not an integer: " + s);
  }
  return v;
}

std::string Manifest::to_string() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  return out.str();
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::io_error, "line " + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    m.entries_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return m;
}

void Manifest::save(const fs::path& path) const { write_text(path, to_string()); }

Manifest Manifest::load(const fs::path& path) { return parse(read_text(path)); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

void write_matrix(const fs::path& path, const Matrix& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

Matrix read_matrix(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(rm.size() * sizeof(double))) {
    throw Error(ErrorCode::io_error, path.string() + " is shorter than its declared shape");
  }
  return rm;
}

void write_ints(const fs::path& path, const std::vector<int>& values) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  std::vector<std::int32_t> buf(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(std::int32_t)));
}

std::vector<int> read_ints(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<std::int32_t> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(std::int32_t)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(std::int32_t))) {
    throw Error(ErrorCode::io_error, path.string() + " is shorter than expected");
  }
  return std::vector<int>(buf.begin(), buf.end());
}

void save_parameters(const fs::path& dir, const std::vector<const ad::Parameter*>& params) {
  fs::create_directories(dir);
  std::ofstream blob(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!blob) throw Error(ErrorCode::io_error, "cannot write " + (dir / "params.bin").string());
  std::ostringstream index;
  std::size_t offset = 0;
  for (const auto* p : params) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p->value;
    blob.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    index << p->name << ' ' << rm.rows() << ' ' << rm.cols() << ' ' << offset << '\n';
    offset += static_cast<std::size_t>(rm.size());
  }
  write_text(dir / "params.txt", index.str());
}

void load_parameters(const fs::path& dir, const std::vector<ad::Parameter*>& params) {
  std::istringstream index(read_text(dir / "params.txt"));
  const std::string blob = read_text(dir / "params.bin");
  std::map<std::string, std::tuple<Eigen::Index, Eigen::Index, std::size_t>> entries;
  std::string name;
  Eigen::Index r = 0, c = 0;
  std::size_t off = 0;
  while (index >> name >> r >> c >> off) entries[name] = {r, c, off};
  for (auto* p : params) {
    auto it = entries.find(p->name);
    if (it == entries.end()) throw Error(ErrorCode::io_error, dir.string() + ": missing parameter " + p->name);
    const auto [rows, cols, offset] = it->second;
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(ErrorCode::shape_mismatch, dir.string() + ": parameter " + p->name + " has a different shape");
    }
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if ((offset * sizeof(double)) + bytes > blob.size()) {
      throw Error(ErrorCode::io_error, dir.string() + ": params.bin is truncated");
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    std::memcpy(rm.data(), blob.data() + offset * sizeof(double), bytes);
    p->value = rm;
    p->grad = Matrix::Zero(rows, cols);
  }
}

}  // namespace jnflow::io
