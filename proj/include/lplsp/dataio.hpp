#pragma once

// File formats.
//
// Dataset CSV: one metadata comment line, a header, then one row per sample.
//
//   # T0=<value> colocated=<c>
//   time,P1,...,PN,T1,...,TM
//   0,0,0,20,20
//
// Model file: JSON with schema_version, M, N, T0_celsius, R_row_major,
// K_row_major, parameterization {variant, rank?, colocated_count?} and an
// optional fit block {residual_norm, iterations, elapsed_s}.
//
// Numbers are written with 17 significant digits (datasets) or the JSON
// library's round-trip-exact encoding (models), so save/load pairs reproduce
// doubles bitwise.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lplsp/types.hpp"

namespace lplsp {

namespace detail {

inline std::string format_double(double value) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view token, const std::string& path,
                           long line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(path, line, "not a number: '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(path, line, "non-finite value: '" + std::string(token) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t begin = 0;
  while (true) {
    const size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

// Header must be exactly time,P1..PN,T1..TM (T columns optional for pure
// excitation files). Returns (N, M).
inline std::pair<Index, Index> parse_header(std::string_view header,
                                            const std::string& path, long line,
                                            bool require_temps) {
  const auto cols = split_csv(header);
  if (cols.empty() || cols[0] != "time") {
    throw ParseError(path, line, "malformed header: first column must be 'time'");
  }
  size_t pos = 1;
  Index n = 0;
  while (pos < cols.size() && cols[pos] == "P" + std::to_string(n + 1)) {
    ++n;
    ++pos;
  }
  Index m = 0;
  while (pos < cols.size() && cols[pos] == "T" + std::to_string(m + 1)) {
    ++m;
    ++pos;
  }
  if (pos != cols.size() || n < 1) {
    throw ParseError(path, line,
                     "malformed header: expected time,P1..PN,T1..TM, got '" +
                         std::string(header) + "'");
  }
  if (require_temps && m < 1) {
    throw ParseError(path, line, "malformed header: no temperature columns");
  }
  return {n, m};
}

struct DatasetMetadata {
  double t0 = 0.0;
  Index colocated = 0;
};

inline DatasetMetadata parse_metadata(const std::string& line,
                                      const std::string& path) {
  const std::string prefix = "# T0=";
  if (line.rfind(prefix, 0) != 0) {
    throw ParseError(path, 1, "expected metadata line '# T0=<value> colocated=<c>'");
  }
  const size_t space = line.find(" colocated=", prefix.size());
  if (space == std::string::npos) {
    throw ParseError(path, 1, "metadata line missing 'colocated=<c>'");
  }
  constexpr std::string_view kColocKey = " colocated=";
  DatasetMetadata meta;
  meta.t0 = parse_double(
      std::string_view(line).substr(prefix.size(), space - prefix.size()), path, 1);
  const std::string_view coloc =
      std::string_view(line).substr(space + kColocKey.size());
  long long value = 0;
  const auto res =
      std::from_chars(coloc.data(), coloc.data() + coloc.size(), value);
  if (res.ec != std::errc() || res.ptr != coloc.data() + coloc.size() || value < 0) {
    throw ParseError(path, 1, "bad colocated count: '" + std::string(coloc) + "'");
  }
  meta.colocated = static_cast<Index>(value);
  return meta;
}

struct RawTable {
  DatasetMetadata meta;
  Index sources = 0;
  Index monitors = 0;
  Vector time;
  Matrix powers;  // N x T
  Matrix temps;   // M x T
};

inline RawTable read_table(const std::string& path, bool require_temps,
                           bool require_meta) {
  std::ifstream in(path);
  if (!in) {
    throw IOError("cannot open '" + path + "' for reading");
  }
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line)) {
    throw ParseError(path, 1, "empty file");
  }
  ++line_no;
  RawTable table;
  const bool has_meta = line.rfind("#", 0) == 0;
  if (require_meta && !has_meta) {
    throw ParseError(path, 1, "expected metadata line '# T0=<value> colocated=<c>'");
  }
  if (has_meta) {
    table.meta = parse_metadata(line, path);
    if (!std::getline(in, line)) {
      throw ParseError(path, 2, "missing header line");
    }
    ++line_no;
  }
  const auto [n, m] = parse_header(line, path, line_no, require_temps);
  table.sources = n;
  table.monitors = m;

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    const auto cols = split_csv(line);
    if (static_cast<Index>(cols.size()) != 1 + n + m) {
      throw ParseError(path, line_no,
                       "expected " + std::to_string(1 + n + m) + " columns, got " +
                           std::to_string(cols.size()));
    }
    std::vector<double> row(cols.size());
    for (size_t c = 0; c < cols.size(); ++c) {
      row[c] = parse_double(cols[c], path, line_no);
    }
    if (!times.empty() && !(row[0] > times.back())) {
      throw ParseError(path, line_no, "time stamps must be strictly increasing");
    }
    times.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  if (times.size() < 2) {
    throw ParseError(path, line_no, "need at least two samples");
  }

  const Index t_len = static_cast<Index>(times.size());
  table.time = Eigen::Map<Vector>(times.data(), t_len);
  table.powers.resize(n, t_len);
  table.temps.resize(m, t_len);
  for (Index s = 0; s < t_len; ++s) {
    for (Index j = 0; j < n; ++j) table.powers(j, s) = rows[s][1 + j];
    for (Index i = 0; i < m; ++i) table.temps(i, s) = rows[s][1 + n + i];
  }
  return table;
}

inline void wrap_invariant(const std::string& path, const std::function<void()>& op) {
  try {
    op();
  } catch (const Error& e) {
    throw ParseError(path, 0, e.what());
  }
}

}  // namespace detail

inline void write_dataset(const TransientDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + path + "' for writing");
  }
  out << "# T0=" << detail::format_double(dataset.t0())
      << " colocated=" << dataset.colocated_count() << "\n";
  out << "time";
  for (Index j = 0; j < dataset.source_count(); ++j) out << ",P" << (j + 1);
  for (Index i = 0; i < dataset.monitor_count(); ++i) out << ",T" << (i + 1);
  out << "\n";
  for (Index s = 0; s < dataset.sample_count(); ++s) {
    out << detail::format_double(dataset.grid()(s));
    for (Index j = 0; j < dataset.source_count(); ++j) {
      out << ',' << detail::format_double(dataset.powers().values()(j, s));
    }
    for (Index i = 0; i < dataset.monitor_count(); ++i) {
      out << ',' << detail::format_double(dataset.temperatures().values()(i, s));
    }
    out << "\n";
  }
  if (!out) {
    throw IOError("write failed for '" + path + "'");
  }
}

inline TransientDataset read_dataset(const std::string& path) {
  detail::RawTable table =
      detail::read_table(path, /*require_temps=*/true, /*require_meta=*/true);
  std::optional<TransientDataset> dataset;
  detail::wrap_invariant(path, [&] {
    dataset.emplace(TimeGrid(table.time), ExcitationSeries(table.powers),
                    TemperatureSeries(table.temps), table.meta.t0,
                    table.meta.colocated);
  });
  return std::move(*dataset);
}

// Excitation-only reader for prediction inputs: metadata and temperature
// columns are accepted and ignored.
inline std::pair<TimeGrid, ExcitationSeries> read_powers(const std::string& path) {
  detail::RawTable table =
      detail::read_table(path, /*require_temps=*/false, /*require_meta=*/false);
  std::optional<std::pair<TimeGrid, ExcitationSeries>> result;
  detail::wrap_invariant(path, [&] {
    result.emplace(TimeGrid(table.time), ExcitationSeries(table.powers));
  });
  return std::move(*result);
}

inline constexpr int kModelSchemaVersion = 1;

inline void save_model(const CouplingModel& model, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["M"] = model.monitor_count();
  doc["N"] = model.source_count();
  doc["T0_celsius"] = model.t0();
  std::vector<double> r_flat;
  std::vector<double> k_flat;
  r_flat.reserve(model.R().size());
  k_flat.reserve(model.K().size());
  for (Index i = 0; i < model.monitor_count(); ++i) {
    for (Index j = 0; j < model.source_count(); ++j) {
      r_flat.push_back(model.R()(i, j));
      k_flat.push_back(model.K()(i, j));
    }
  }
  doc["R_row_major"] = r_flat;
  doc["K_row_major"] = k_flat;

  nlohmann::ordered_json param;
  const FitProvenance* prov =
      model.provenance() ? &*model.provenance() : nullptr;
  param["variant"] = prov ? prov->variant : "unknown";
  if (prov && prov->rank) param["rank"] = *prov->rank;
  if (prov && prov->colocated_count) {
    param["colocated_count"] = *prov->colocated_count;
  }
  doc["parameterization"] = param;
  if (prov && (prov->residual_norm || prov->iterations || prov->elapsed_s)) {
    nlohmann::ordered_json fit_block;
    if (prov->residual_norm) fit_block["residual_norm"] = *prov->residual_norm;
    if (prov->iterations) fit_block["iterations"] = *prov->iterations;
    if (prov->elapsed_s) fit_block["elapsed_s"] = *prov->elapsed_s;
    doc["fit"] = fit_block;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + path + "' for writing");
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw IOError("write failed for '" + path + "'");
  }
}

inline CouplingModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IOError("cannot open '" + path + "' for reading");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, std::string("invalid model file: ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw ParseError(path, 0,
                       "unsupported schema_version " + std::to_string(version));
    }
    const Index monitors = doc.at("M").get<Index>();
    const Index sources = doc.at("N").get<Index>();
    const auto r_flat = doc.at("R_row_major").get<std::vector<double>>();
    const auto k_flat = doc.at("K_row_major").get<std::vector<double>>();
    if (monitors < 1 || sources < 1 ||
        static_cast<Index>(r_flat.size()) != monitors * sources ||
        static_cast<Index>(k_flat.size()) != monitors * sources) {
      throw ParseError(path, 0, "R/K array lengths do not match M*N");
    }
    Matrix r(monitors, sources);
    Matrix k(monitors, sources);
    for (Index i = 0; i < monitors; ++i) {
      for (Index j = 0; j < sources; ++j) {
        r(i, j) = r_flat[static_cast<size_t>(i * sources + j)];
        k(i, j) = k_flat[static_cast<size_t>(i * sources + j)];
      }
    }
    FitProvenance prov;
    if (doc.contains("parameterization")) {
      const auto& param = doc.at("parameterization");
      prov.variant = param.value("variant", "unknown");
      if (param.contains("rank")) prov.rank = param.at("rank").get<int>();
      if (param.contains("colocated_count")) {
        prov.colocated_count = param.at("colocated_count").get<Index>();
      }
    }
    if (doc.contains("fit")) {
      const auto& fit_block = doc.at("fit");
      if (fit_block.contains("residual_norm")) {
        prov.residual_norm = fit_block.at("residual_norm").get<double>();
      }
      if (fit_block.contains("iterations")) {
        prov.iterations = fit_block.at("iterations").get<int>();
      }
      if (fit_block.contains("elapsed_s")) {
        prov.elapsed_s = fit_block.at("elapsed_s").get<double>();
      }
    }
    std::optional<CouplingModel> model;
    detail::wrap_invariant(path, [&] {
      model.emplace(std::move(r), std::move(k), doc.at("T0_celsius").get<double>(),
                    prov);
    });
    return std::move(*model);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, std::string("invalid model file: ") + e.what());
  }
}

}  // namespace lplsp
