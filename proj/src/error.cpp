// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/error.hpp"

namespace thermoloop {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Sizing: return "sizing error";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::NumericFault: return "numeric fault";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace thermoloop
