#pragma once

#include <stdexcept>
#include <string>

namespace somn {

// Error codes cover every failure mode the library reports. They fall into
// three domains that the CLI maps onto process exit codes: configuration (1),
// data (2) and numerical (3).
enum class errc {
  // configuration / shape
  invalid_config,
  shape_mismatch,
  invalid_epsilon,
  waveform_too_long,
  insufficient_length,
  // data
  constant_signal,
  too_short,
  invalid_rate,
  no_complete_epoch,
  placement_overflow,
  malformed,
  inconsistent_lengths,
  unknown_token,
  too_few_subjects,
  io_error,
  // numerical
  diverged,
  non_finite,
  zero_filter,
  degenerate_saliency,
};

enum class error_domain : int { config = 1, data = 2, numeric = 3 };

error_domain domain_of(errc code) noexcept;
const char* name_of(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(name_of(code)) + ": " + message), code_(code) {}

  errc code() const noexcept { return code_; }
  error_domain domain() const noexcept { return domain_of(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, errc code, const std::string& message) {
  if (!condition) raise(code, message);
}

}  // namespace somn
