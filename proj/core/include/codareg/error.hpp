#pragma once

#include <stdexcept>
#include <string>

namespace codareg {

//! Failure categories raised by the library.
enum class Errc {
  non_positive_part,
  dimension_mismatch,
  dimension_too_small,
  not_in_hyperplane,
  degenerate_draw,
  singular_bandwidth,
  all_weights_zero,
  singular_design,
  zero_scale,
  no_bracket,
  length_mismatch,
  fold_too_small,
  no_valid_bandwidth,
  parse_error,
  ragged_row,
};

//! Stable identifier for an Errc, used in messages and CLI diagnostics.
const char* errc_name(Errc code);

//! Single exception type carrying an Errc tag.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace codareg
