#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mindswarm {

enum class Errc {
  invalid_argument,
  invalid_spec,
  too_short,
  empty_window,
  bad_magic,
  version_mismatch,
  truncated,
  io,
  malformed,
  rank_deficient,
  degenerate_trial,
  singular,
  dimension_mismatch,
  insufficient_data,
  missing_channel,
  timing,
  diverged,
  illegal_command,
  bind_failed,
  connect_failed,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::too_short: return "too_short";
    case Errc::empty_window: return "empty_window";
    case Errc::bad_magic: return "bad_magic";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::truncated: return "truncated";
    case Errc::io: return "io";
    case Errc::malformed: return "malformed";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::degenerate_trial: return "degenerate_trial";
    case Errc::singular: return "singular";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::missing_channel: return "missing_channel";
    case Errc::timing: return "timing";
    case Errc::diverged: return "diverged";
    case Errc::illegal_command: return "illegal_command";
    case Errc::bind_failed: return "bind_failed";
    case Errc::connect_failed: return "connect_failed";
  }
  return "unknown";
}

/// Library-wide exception. Every failure carries a stable code so callers
/// (and the CLI exit-code mapping) can branch on it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace mindswarm
