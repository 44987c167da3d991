// protrack/io.hpp

// Copyright 2026 The protrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Line-delimited JSON helpers shared by every file format in the toolkit.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "protrack/errors.hpp"

namespace protrack {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

struct JsonRecord {
  std::size_t line = 0;  // 1-based line number in the source file
  Json value;
};

// Parses every non-blank line of `text` as one JSON object.
inline std::vector<JsonRecord> parse_json_lines(std::string_view text,
                                                const std::string& source) {
  std::vector<JsonRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    JsonRecord record;
    record.line = line_no;
    try {
      record.value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": JSON parse error: " + e.what());
    }
    if (!record.value.is_object()) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": record is not a JSON object");
    }
    records.push_back(std::move(record));
    if (eol == text.size()) break;
  }
  return records;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return buffer.str();
}

inline std::vector<JsonRecord> read_json_lines(const std::string& path) {
  return parse_json_lines(read_text_file(path), path);
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

// Accessors that turn schema violations into ValidationError with the
// record's location.
class RecordReader {
 public:
  RecordReader(const JsonRecord& record, std::string source)
      : record_(record), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError(source_ + ":" + std::to_string(record_.line) + ": " +
                          what);
  }

  const Json& require(const char* field) const {
    auto it = record_.value.find(field);
    if (it == record_.value.end()) {
      fail(std::string("missing field '") + field + "'");
    }
    return *it;
  }

  const Json* optional(const char* field) const {
    auto it = record_.value.find(field);
    return it == record_.value.end() ? nullptr : &*it;
  }

  std::string string_field(const char* field) const {
    const Json& v = require(field);
    if (!v.is_string()) fail(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> string_array(const Json& v, const char* what) const {
    if (!v.is_array()) fail(std::string(what) + " must be an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
      if (!item.is_string()) fail(std::string(what) + " must contain strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  const JsonRecord& record() const { return record_; }
  const std::string& source() const { return source_; }

 private:
  const JsonRecord& record_;
  std::string source_;
};

// %.17g rendering used by the model file. -inf is written as the JSON
// string "-inf".
inline std::string format_score(double value) {
  if (std::isinf(value) && value < 0) return "\"-inf\"";
  if (!std::isfinite(value)) {
    throw ValidationError("cannot serialize non-finite score");
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace protrack
