// Copyright 2026 The agzo-lab Authors
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

#ifndef AGZO_REPORT_HPP_
#define AGZO_REPORT_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "agzo/errors.hpp"

namespace agzo {

// 17 significant digits: enough for exact double round-trips, so identical
// runs serialize to identical bytes.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_size(std::uint64_t v) { return std::to_string(v); }

// RFC 4180 rows with LF line endings. Fields are quoted only when they
// contain a comma, quote, or newline, which keeps the numeric tables clean.
class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw config_error("cannot open " + path.string());
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(fields[i]);
    }
    out_ << '\n';
  }

  static std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    return quoted;
  }

 private:
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open " + path.string());
  out << content;
}

}  // namespace agzo

#endif  // AGZO_REPORT_HPP_
