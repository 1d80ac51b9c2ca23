#include "oica/errors.hpp"

namespace oica {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::format: return "format";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::assumption: return "assumption";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::deflation: return "deflation";
  }
  return "unknown";
}

void rethrow_with_stage(const Error& e, const std::string& stage) {
  throw Error(e.kind(), "[" + stage + "] " + e.what());
}

}  // namespace oica
