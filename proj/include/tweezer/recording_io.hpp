#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tweezer/error.hpp"
#include "tweezer/timeseries.hpp"

namespace tweezer {

/// Column selector: either a zero-based index or a header name.
using ColumnRef = std::variant<std::size_t, std::string>;

/// Channel name -> source column.
using ChannelSchema = std::map<std::string, ColumnRef>;

/// Parses "X=0,S=1,Xk=2" (indices) or "X=volt_x,S=sum" (header names).
inline ChannelSchema parse_channel_schema(std::string_view text) {
  ChannelSchema schema;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) {
      if (comma == text.size()) break;
      continue;
    }
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
      throw SchemaError("bad channel mapping '" + std::string(item) + "', expected NAME=COLUMN");
    }
    std::string name(item.substr(0, eq));
    std::string_view col = item.substr(eq + 1);
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(col.data(), col.data() + col.size(), index);
    if (ec == std::errc() && ptr == col.data() + col.size()) {
      schema[name] = index;
    } else {
      schema[name] = std::string(col);
    }
    if (comma == text.size()) break;
  }
  if (schema.empty()) throw SchemaError("empty channel mapping");
  return schema;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(delim, pos);
    std::string_view f = line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\r')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.remove_suffix(1);
    fields.push_back(f);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return fields;
}

inline bool parse_double(std::string_view field, double& out) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

inline void parse_meta_comment(std::string_view line, RecordingMeta& meta) {
  line.remove_prefix(1);
  while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  const std::size_t colon = line.find(':');
  if (colon == std::string_view::npos) return;
  std::string_view key = line.substr(0, colon);
  std::string_view value = line.substr(colon + 1);
  while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  while (!value.empty() && (value.back() == '\r' || value.back() == ' ')) value.remove_suffix(1);
  if (key == "device") {
    meta.device = std::string(value);
  } else if (key == "power_mw") {
    double p = 0.0;
    if (parse_double(value, p)) meta.power_mw = p;
  } else if (key == "notes") {
    meta.notes = std::string(value);
  }
}

}  // namespace detail

/// Reads a delimited text recording.
///
/// The delimiter (comma or tab) is detected from the first data line. A
/// single header line is honored when present; lines starting with '#' are
/// comments, and "# device:", "# power_mw:" and "# notes:" comments fill the
/// recording metadata. Columns not named in the schema (a time column, for
/// instance) are ignored: the declared sample rate is authoritative.
inline Recording load_recording(const std::filesystem::path& path, const ChannelSchema& schema,
                                double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw RateError("sample rate must be positive");
  }
  if (schema.empty()) throw SchemaError("no channels mapped");
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  RecordingMeta meta;
  std::map<std::string, std::size_t> resolved;
  std::map<std::string, std::vector<double>> columns;
  char delim = 0;
  bool first_content = true;
  std::string line;
  std::size_t row = 0;

  auto resolve_indices = [&](const std::vector<std::string_view>* header) {
    for (const auto& [name, ref] : schema) {
      if (const auto* idx = std::get_if<std::size_t>(&ref)) {
        resolved[name] = *idx;
        continue;
      }
      const auto& col_name = std::get<std::string>(ref);
      if (header == nullptr) {
        throw SchemaError("column '" + col_name + "' referenced by name but file has no header");
      }
      bool found = false;
      for (std::size_t i = 0; i < header->size(); ++i) {
        if ((*header)[i] == col_name) {
          resolved[name] = i;
          found = true;
          break;
        }
      }
      if (!found) throw SchemaError("column '" + col_name + "' not found in header");
    }
  };

  while (std::getline(in, line)) {
    ++row;
    std::string_view view(line);
    while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) view.remove_suffix(1);
    if (view.empty()) continue;
    if (view.front() == '#') {
      detail::parse_meta_comment(view, meta);
      continue;
    }
    if (delim == 0) delim = view.find('\t') != std::string_view::npos ? '\t' : ',';
    auto fields = detail::split_fields(view, delim);

    if (first_content) {
      first_content = false;
      double probe = 0.0;
      bool numeric = true;
      for (auto f : fields) numeric = numeric && detail::parse_double(f, probe);
      if (!numeric) {
        resolve_indices(&fields);
        for (const auto& [name, idx] : resolved) {
          (void)idx;
          columns[name];
        }
        continue;
      }
      resolve_indices(nullptr);
    }

    for (const auto& [name, idx] : resolved) {
      if (idx >= fields.size()) {
        throw SchemaError("row " + std::to_string(row) + " has no column " + std::to_string(idx) +
                          " for channel '" + name + "'");
      }
      double v = 0.0;
      if (!detail::parse_double(fields[idx], v) || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(idx) +
                         ": cannot parse '" + std::string(fields[idx]) + "' as a finite number");
      }
      columns[name].push_back(v);
    }
  }
  if (first_content) throw ParseError("'" + path.string() + "' contains no data");

  std::map<std::string, TimeSeries> channels;
  for (auto& [name, values] : columns) {
    if (values.empty()) throw ParseError("'" + path.string() + "' has a header but no data rows");
    channels.emplace(name, TimeSeries(std::move(values), sample_rate_hz));
  }
  return Recording(std::move(channels), std::move(meta));
}

/// Writes a recording as comma-separated text with a header line of
/// channel names. Values carry `significant_digits` digits (%.*g).
inline void export_recording(const std::filesystem::path& path, const Recording& recording,
                             int significant_digits = 9) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw ParseError("cannot write '" + path.string() + "'");
  const auto& meta = recording.meta();
  if (!meta.device.empty()) std::fprintf(f, "# device: %s\n", meta.device.c_str());
  if (meta.power_mw) std::fprintf(f, "# power_mw: %.17g\n", *meta.power_mw);
  if (!meta.notes.empty()) std::fprintf(f, "# notes: %s\n", meta.notes.c_str());
  std::fprintf(f, "# sample_rate_hz: %.17g\n", recording.sample_rate_hz());

  std::vector<const TimeSeries*> cols;
  bool first = true;
  for (const auto& [name, series] : recording.channels()) {
    std::fprintf(f, first ? "%s" : ",%s", name.c_str());
    first = false;
    cols.push_back(&series);
  }
  std::fputc('\n', f);
  for (std::size_t i = 0; i < recording.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::fprintf(f, c == 0 ? "%.*g" : ",%.*g", significant_digits, (*cols[c])[i]);
    }
    std::fputc('\n', f);
  }
  const bool failed = std::ferror(f) != 0;
  std::fclose(f);
  if (failed) throw ParseError("write error on '" + path.string() + "'");
}

/// Header facts of a delimited recording: column names from the header line
/// (empty when the first content line is numeric) and the sample rate from a
/// "# sample_rate_hz:" comment when one precedes the data.
struct RecordingHeader {
  std::vector<std::string> column_names;
  std::optional<double> sample_rate_hz;
};

inline RecordingHeader inspect_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  RecordingHeader header;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view(line);
    while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) view.remove_suffix(1);
    if (view.empty()) continue;
    if (view.front() == '#') {
      constexpr std::string_view key = "# sample_rate_hz:";
      if (view.substr(0, key.size()) == key) {
        std::string_view value = view.substr(key.size());
        while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        double rate = 0.0;
        if (detail::parse_double(value, rate)) header.sample_rate_hz = rate;
      }
      continue;
    }
    const char delim = view.find('\t') != std::string_view::npos ? '\t' : ',';
    const auto fields = detail::split_fields(view, delim);
    double probe = 0.0;
    bool numeric = true;
    for (auto f : fields) numeric = numeric && detail::parse_double(f, probe);
    if (!numeric) {
      for (auto f : fields) header.column_names.emplace_back(f);
    }
    break;
  }
  return header;
}

/// Schema mapping every header column of an exported recording by name.
inline ChannelSchema schema_from_names(const std::vector<std::string>& names) {
  ChannelSchema schema;
  for (const auto& n : names) schema[n] = n;
  return schema;
}

}  // namespace tweezer
