#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmflab/errors.hpp"
#include "qmflab/montecarlo.hpp"
#include "qmflab/spectrum.hpp"
#include "qmflab/wick.hpp"

namespace qmf {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline void write_metadata(std::ostream& out, const Metadata& meta, bool timestamp) {
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << "\n";
  if (timestamp) out << "# timestamp: " << utc_timestamp() << "\n";
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

inline double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("line " + std::to_string(line) + ": not a number: '" + s + "'");
}

}  // namespace detail

/// Metadata carried by every spectrum CSV.
inline Metadata spectrum_metadata(const SpectrumSample& s) {
  return {{"network", s.network},
          {"N", std::to_string(s.N)},
          {"seed", std::to_string(s.seed)},
          {"ensemble", s.ensemble},
          {"normalization", std::string(to_string(s.normalization))},
          {"divisor", format_double(s.divisor)}};
}

/// `index,sigma,sigma_normalized`, one row per value, `#` metadata first.
inline void write_spectrum_csv(std::ostream& out, const SpectrumSample& s, Metadata extra = {},
                               bool timestamp = true) {
  Metadata meta = spectrum_metadata(s);
  meta.insert(meta.end(), extra.begin(), extra.end());
  detail::write_metadata(out, meta, timestamp);
  out << "index,sigma,sigma_normalized\n";
  for (std::size_t i = 0; i < s.values.size(); ++i)
    out << i << "," << format_double(s.values[i] * s.divisor) << ","
        << format_double(s.values[i]) << "\n";
}

struct CsvTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  /// `#` lines after the header, in order.
  std::vector<std::string> trailing_comments;
};

/// Reads a CSV with `# key: value` preamble and numeric rows, checking the
/// header against `expected`.
inline CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.header.empty()) {
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
          const auto key = line.substr(2, colon - 2);
          auto value = line.substr(colon + 1);
          if (!value.empty() && value[0] == ' ') value.erase(0, 1);
          t.metadata[key] = value;
        }
      } else {
        t.trailing_comments.push_back(line);
      }
      continue;
    }
    if (t.header.empty()) {
      t.header = detail::split_csv(line);
      if (t.header != expected)
        throw ParseError("line " + std::to_string(lineno) + ": unexpected header '" + line + "'");
      continue;
    }
    const auto cells = detail::split_csv(line);
    if (cells.size() != t.header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(detail::to_double(c, lineno));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError("missing CSV header");
  return t;
}

inline const std::vector<std::string> kSpectrumHeader{"index", "sigma", "sigma_normalized"};
inline const std::vector<std::string> kRankScanHeader{"N",    "N_mod_4", "qmc",       "rank",
                                                      "deficit", "min_sigma", "next_sigma"};

inline CsvTable read_spectrum_csv(std::istream& in) { return read_csv(in, kSpectrumHeader); }

/// Rows sorted by (N, sample); each row is followed by a `#` line with its
/// sample index and gap verdict.
inline void write_rank_scan_csv(std::ostream& out, std::vector<RankScanRow> rows,
                                const Metadata& meta, bool timestamp = true) {
  std::sort(rows.begin(), rows.end(), [](const RankScanRow& a, const RankScanRow& b) {
    return std::pair(a.N, a.sample) < std::pair(b.N, b.sample);
  });
  detail::write_metadata(out, meta, timestamp);
  out << "N,N_mod_4,qmc,rank,deficit,min_sigma,next_sigma\n";
  for (const auto& r : rows) {
    out << r.N << "," << r.N % 4 << "," << r.qmc << "," << r.rank << "," << r.deficit << ","
        << format_double(r.min_sigma) << "," << format_double(r.next_sigma) << "\n";
    out << "# N=" << r.N << " sample=" << r.sample
        << " gap_ratio=" << format_double(r.report.gap_ratio)
        << " threshold=" << format_double(r.report.threshold)
        << " verdict=" << r.report.verdict() << "\n";
  }
}

inline CsvTable read_rank_scan_csv(std::istream& in) { return read_csv(in, kRankScanHeader); }

inline nlohmann::json polynomial_to_json(const MomentPolynomial& p) {
  nlohmann::json coeffs = nlohmann::json::object();
  for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it)
    coeffs[std::to_string(it->first)] = it->second;
  return {{"network", p.network},
          {"k", p.k},
          {"ensemble", std::string(to_string(p.ensemble))},
          {"coefficients", coeffs},
          {"complete", p.complete},
          {"c_max", p.c_max()},
          {"n_max", p.n_max()}};
}

inline MomentPolynomial polynomial_from_json(const nlohmann::json& j) {
  try {
    MomentPolynomial p;
    p.network = j.at("network").get<std::string>();
    p.k = j.at("k").get<int>();
    p.ensemble = parse_ensemble(j.at("ensemble").get<std::string>());
    p.complete = j.value("complete", true);
    for (const auto& [exp, count] : j.at("coefficients").items())
      p.coefficients[std::stoi(exp)] = count.get<std::uint64_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("moment polynomial: ") + e.what());
  }
}

}  // namespace qmf
