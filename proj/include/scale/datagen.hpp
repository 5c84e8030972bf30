#pragma once

// Synthetic benchmark datasets and CSV import/export.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scale/oracle.hpp"

namespace scale::datagen {

inline constexpr std::uint32_t kDomainMax = 1'000'000;

// Noise of CORR around the shared base value.
inline constexpr double kCorrSigma = 5e4;
// ANTI: jitter of the plane constant and spread across dimensions.
inline constexpr double kAntiPlaneSigma = 2.5e4;
inline constexpr double kAntiSpreadSigma = 1.5e5;

enum class Distribution { inde, corr, anti };

Distribution parse_distribution(std::string_view name);
const char* distribution_name(Distribution dist);

// Ids are 1..n. Throws ErrorCode::parameter for n < 2 or d < 1.
std::vector<PlainRecord> gen_inde(std::size_t n, std::size_t d,
                                  std::uint64_t seed);
std::vector<PlainRecord> gen_corr(std::size_t n, std::size_t d,
                                  std::uint64_t seed);
std::vector<PlainRecord> gen_anti(std::size_t n, std::size_t d,
                                  std::uint64_t seed);
std::vector<PlainRecord> generate(Distribution dist, std::size_t n,
                                  std::size_t d, std::uint64_t seed);

struct CsvOptions {
  // Header names or 0-based column indices. Empty selects every column
  // except one named "id".
  std::vector<std::string> columns;
  // Values are multiplied by this and rounded to the nearest integer.
  double scale = 1.0;
};

// Ids are assigned 1..n in file order. The first row is a header.
// Throws ErrorCode::empty_dataset, ::parse (with line number) or
// ::overflow.
std::vector<PlainRecord> load_csv(const std::string& path,
                                  const CsvOptions& opts = {});
std::vector<PlainRecord> parse_csv(std::string_view text,
                                   const CsvOptions& opts = {});

// Header "id,x1,...,xd" followed by one row per record.
void write_csv(const std::string& path, const std::vector<PlainRecord>& recs);
std::string format_csv(const std::vector<PlainRecord>& recs);

}  // namespace scale::datagen
