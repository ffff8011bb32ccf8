#include "relcomp/error.h"

namespace relcomp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput: return "input";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kBackend: return "backend";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kGone: return "gone";
  }
  return "unknown";
}

}  // namespace relcomp
