#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scale {

// Numeric values travel in ERR frames; do not renumber.
enum class ErrorCode : std::uint16_t {
  parameter = 1,
  format = 2,
  domain = 3,
  overflow = 4,
  duplicate_id = 5,
  unknown_id = 6,
  missing_sum = 7,
  incomplete_query = 8,
  tamper = 9,
  parse = 10,
  empty_dataset = 11,
  inconsistent_bundle = 12,
  unknown_ooc = 13,
  protocol = 14,
  transport = 15,
  io = 16,
  internal = 17,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace scale
