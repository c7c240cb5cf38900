#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wordfuse/corpus.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/run_config.hpp"

namespace wordfuse {

// 0 success, 1 input/configuration error, 2 numeric or training failure.
int exit_code_for(ErrorKind kind);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct AlignReport {
  std::vector<UtteranceRecord> records;  // copies with intervals filled in
  std::vector<std::string> failures;
  std::size_t words_compared = 0;        // words that also carried intervals on input
  std::size_t words_within_tolerance = 0;
};

// tolerance is in frames, applied to both boundaries.
AlignReport align_manifest(const Manifest& manifest, const Manifest& reference, const RunConfig& config,
                           std::size_t tolerance = 2);

FrameMatrix record_frames(const Manifest& manifest, const UtteranceRecord& record, const MfscConfig& config);

}  // namespace wordfuse
