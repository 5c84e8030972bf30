#include "scale/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/tokenizer.hpp>

#include "scale/error.hpp"

namespace scale::datagen {
namespace {

void check_shape(std::size_t n, std::size_t d) {
  if (n < 2) fail(ErrorCode::parameter, "datagen: n must be at least 2");
  if (d < 1) fail(ErrorCode::parameter, "datagen: d must be at least 1");
}

std::uint32_t clamp_round(double v) {
  v = std::clamp(std::round(v), 0.0, static_cast<double>(kDomainMax));
  return static_cast<std::uint32_t>(v);
}

std::vector<PlainRecord> blank(std::size_t n, std::size_t d) {
  std::vector<PlainRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].record_id = i + 1;
    out[i].attrs.resize(d);
  }
  return out;
}

using Tokens = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> split_row(const std::string& line,
                                   std::size_t line_no) {
  try {
    Tokens tok(line);
    std::vector<std::string> out(tok.begin(), tok.end());
    for (auto& cell : out) {
      auto b = cell.find_first_not_of(" \t\r");
      auto e = cell.find_last_not_of(" \t\r");
      cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
    }
    return out;
  } catch (const boost::escaped_list_error& err) {
    fail(ErrorCode::parse,
         "csv line " + std::to_string(line_no) + ": " + err.what());
  }
}

bool is_index(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

}  // namespace

Distribution parse_distribution(std::string_view name) {
  if (name == "inde") return Distribution::inde;
  if (name == "corr") return Distribution::corr;
  if (name == "anti") return Distribution::anti;
  fail(ErrorCode::parameter, "unknown distribution '" + std::string(name) +
                                 "' (expected inde, corr or anti)");
}

const char* distribution_name(Distribution dist) {
  switch (dist) {
    case Distribution::inde: return "inde";
    case Distribution::corr: return "corr";
    case Distribution::anti: return "anti";
  }
  return "unknown";
}

std::vector<PlainRecord> gen_inde(std::size_t n, std::size_t d,
                                  std::uint64_t seed) {
  check_shape(n, d);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> u(0, kDomainMax);
  auto out = blank(n, d);
  for (auto& r : out) {
    for (auto& v : r.attrs) v = u(rng);
  }
  return out;
}

std::vector<PlainRecord> gen_corr(std::size_t n, std::size_t d,
                                  std::uint64_t seed) {
  check_shape(n, d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base(0.0, kDomainMax);
  std::normal_distribution<double> noise(0.0, kCorrSigma);
  auto out = blank(n, d);
  for (auto& r : out) {
    double b = base(rng);
    for (auto& v : r.attrs) v = clamp_round(b + noise(rng));
  }
  return out;
}

std::vector<PlainRecord> gen_anti(std::size_t n, std::size_t d,
                                  std::uint64_t seed) {
  check_shape(n, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> plane(0.0, kAntiPlaneSigma);
  std::normal_distribution<double> spread(0.0, kAntiSpreadSigma);
  auto out = blank(n, d);
  std::vector<double> e(d);
  const double centre = kDomainMax / 2.0;
  for (auto& r : out) {
    // Points near the hyperplane sum(x) = c: zero-mean offsets per
    // dimension around the plane's centre.
    double c = centre + plane(rng) / static_cast<double>(d);
    double mean = 0;
    for (auto& x : e) {
      x = spread(rng);
      mean += x;
    }
    mean /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) r.attrs[j] = clamp_round(c + e[j] - mean);
  }
  return out;
}

std::vector<PlainRecord> generate(Distribution dist, std::size_t n,
                                  std::size_t d, std::uint64_t seed) {
  switch (dist) {
    case Distribution::inde: return gen_inde(n, d, seed);
    case Distribution::corr: return gen_corr(n, d, seed);
    case Distribution::anti: return gen_anti(n, d, seed);
  }
  fail(ErrorCode::parameter, "unknown distribution");
}

std::vector<PlainRecord> parse_csv(std::string_view text,
                                   const CsvOptions& opts) {
  if (!(opts.scale > 0) || !std::isfinite(opts.scale)) {
    fail(ErrorCode::parameter, "csv: scale must be positive");
  }
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_row(line, line_no);
  }
  if (header.empty()) fail(ErrorCode::empty_dataset, "csv: file is empty");

  std::vector<std::size_t> cols;
  if (opts.columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] != "id") cols.push_back(i);
    }
  } else {
    for (const std::string& c : opts.columns) {
      auto it = std::find(header.begin(), header.end(), c);
      if (it != header.end()) {
        cols.push_back(static_cast<std::size_t>(it - header.begin()));
      } else if (is_index(c) && std::stoul(c) < header.size()) {
        cols.push_back(std::stoul(c));
      } else {
        fail(ErrorCode::parse, "csv: no column '" + c + "'");
      }
    }
  }
  if (cols.empty()) fail(ErrorCode::parse, "csv: no attribute columns");

  std::vector<PlainRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> cells = split_row(line, line_no);
    PlainRecord rec;
    rec.record_id = out.size() + 1;
    for (std::size_t c : cols) {
      if (c >= cells.size()) {
        fail(ErrorCode::parse, "csv line " + std::to_string(line_no) +
                                   ": missing column " + header[c]);
      }
      const std::string& cell = cells[c];
      double v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        fail(ErrorCode::parse, "csv line " + std::to_string(line_no) +
                                   ": '" + cell + "' in column " + header[c] +
                                   " is not a number");
      }
      double scaled = std::round(v * opts.scale);
      if (scaled < 0 || scaled > 2147483647.0) {
        fail(ErrorCode::overflow, "csv line " + std::to_string(line_no) +
                                      ": value " + cell +
                                      " out of range after scaling");
      }
      rec.attrs.push_back(static_cast<std::uint32_t>(scaled));
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) fail(ErrorCode::empty_dataset, "csv: no data rows");
  return out;
}

std::vector<PlainRecord> load_csv(const std::string& path,
                                  const CsvOptions& opts) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_csv(buf.str(), opts);
}

std::string format_csv(const std::vector<PlainRecord>& recs) {
  std::ostringstream out;
  const std::size_t d = recs.empty() ? 0 : recs.front().attrs.size();
  out << "id";
  for (std::size_t j = 1; j <= d; ++j) out << ",x" << j;
  out << '\n';
  for (const PlainRecord& r : recs) {
    out << r.record_id;
    for (std::uint32_t v : r.attrs) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

void write_csv(const std::string& path, const std::vector<PlainRecord>& recs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::io, "cannot write " + path);
  f << format_csv(recs);
  if (!f) fail(ErrorCode::io, "write failed: " + path);
}

}  // namespace scale::datagen
