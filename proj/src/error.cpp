#include "wordfuse/error.hpp"

namespace wordfuse {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kEmptyAttention: return "empty-attention";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kManifest: return "manifest";
    case ErrorKind::kEmbeddingFile: return "embedding file";
    case ErrorKind::kSplit: return "split";
    case ErrorKind::kFusion: return "fusion";
    case ErrorKind::kListing: return "listing";
    case ErrorKind::kEmptySignal: return "empty-signal";
    case ErrorKind::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace wordfuse
