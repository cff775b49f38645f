#include "somn/error.hpp"

namespace somn {

error_domain domain_of(errc code) noexcept {
  switch (code) {
    case errc::invalid_config:
    case errc::shape_mismatch:
    case errc::invalid_epsilon:
    case errc::waveform_too_long:
    case errc::insufficient_length:
      return error_domain::config;
    case errc::constant_signal:
    case errc::too_short:
    case errc::invalid_rate:
    case errc::no_complete_epoch:
    case errc::placement_overflow:
    case errc::malformed:
    case errc::inconsistent_lengths:
    case errc::unknown_token:
    case errc::too_few_subjects:
    case errc::io_error:
      return error_domain::data;
    case errc::diverged:
    case errc::non_finite:
    case errc::zero_filter:
    case errc::degenerate_saliency:
      return error_domain::numeric;
  }
  return error_domain::config;
}

const char* name_of(errc code) noexcept {
  switch (code) {
    case errc::invalid_config: return "InvalidConfig";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::invalid_epsilon: return "InvalidEpsilon";
    case errc::waveform_too_long: return "WaveformTooLong";
    case errc::insufficient_length: return "InsufficientLength";
    case errc::constant_signal: return "ConstantSignal";
    case errc::too_short: return "TooShort";
    case errc::invalid_rate: return "InvalidRate";
    case errc::no_complete_epoch: return "NoCompleteEpoch";
    case errc::placement_overflow: return "PlacementOverflow";
    case errc::malformed: return "Malformed";
    case errc::inconsistent_lengths: return "InconsistentLengths";
    case errc::unknown_token: return "UnknownToken";
    case errc::too_few_subjects: return "TooFewSubjects";
    case errc::io_error: return "IoError";
    case errc::diverged: return "Diverged";
    case errc::non_finite: return "NonFinite";
    case errc::zero_filter: return "ZeroFilter";
    case errc::degenerate_saliency: return "DegenerateSaliency";
  }
  return "Error";
}

}  // namespace somn
