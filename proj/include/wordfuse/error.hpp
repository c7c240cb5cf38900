#pragma once

#include <stdexcept>
#include <string>

namespace wordfuse {

enum class ErrorKind {
  kDimension,
  kEmptyAttention,
  kConfig,
  kInput,
  kNumeric,
  kAlignment,
  kManifest,
  kEmbeddingFile,
  kSplit,
  kFusion,
  kListing,
  kEmptySignal,
  kFormat,
};

const char* error_kind_name(ErrorKind kind);

// All library failures are reported through this type; kind() lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace wordfuse
