#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wordfuse/align.hpp"
#include "wordfuse/interval.hpp"
#include "wordfuse/rng.hpp"
#include "wordfuse/tensor.hpp"

namespace wordfuse {

inline constexpr int kManifestSchemaVersion = 1;

struct UtteranceRecord {
  std::string id;
  std::vector<std::string> tokens;
  std::string audio;  // relative to the manifest's directory unless absolute
  std::size_t label = 0;
  std::optional<std::vector<WordInterval>> intervals;
  std::optional<std::vector<TimedWord>> timestamps;
  std::optional<std::string> speaker;

  bool operator==(const UtteranceRecord&) const;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  std::filesystem::path base_dir;
  std::vector<std::string> warnings;

  std::filesystem::path audio_path(const UtteranceRecord& r) const;
  std::size_t class_count() const;
  const UtteranceRecord& find(const std::string& id) const;
};

// One JSON object per line:
//   {"schema":1,"id":"u1","transcript":["you're","a","west-sider"],"audio":"u1.wav",
//    "label":1,"speaker":"s0","timestamps":[["you're",0.0,0.31],...],"intervals":[[0,31],...]}
// "transcript" may also be a plain string, which is tokenized on load.
// num_classes > 0 additionally checks every label against it.
Manifest load_manifest(const std::filesystem::path& path, std::size_t num_classes = 0);
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir, std::size_t num_classes = 0);
std::string manifest_line(const UtteranceRecord& record);
void save_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records);

// Lowercase, whitespace split, leading/trailing punctuation stripped;
// intra-word apostrophes and hyphens survive.
std::vector<std::string> tokenize(std::string_view text);

// Row 0 is the unknown-token row.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);
  static Vocabulary from_records(const std::vector<UtteranceRecord>& records);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

struct EmbeddingTable {
  std::size_t dimension = 300;
  Vocabulary vocabulary;
  Tensor matrix;  // |V| × dimension
  std::size_t from_file = 0;
};

// Reproducible uniform[−0.25, 0.25] vector for a token absent from the file.
std::vector<double> oov_vector(const std::string& token, std::size_t dimension, std::uint64_t seed);

// Reads "token v1 .. vD" rows (an optional "count dim" header is skipped).
// An empty path yields an all-OOV table.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                               std::size_t dimension, std::uint64_t seed);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::optional<std::size_t> fold_index;
};

struct SplitConfig {
  double test_fraction = 0.2;
  std::size_t folds = 5;
  bool speaker_independent = false;
  std::uint64_t seed = 0;
};

// Label-stratified held-out test set, then `folds` rotations of the
// validation fold within the remaining pool. folds == 1 leaves validation empty.
std::vector<DatasetSplit> make_splits(const std::vector<UtteranceRecord>& records, const SplitConfig& config);

// One epoch of class-balanced batches over item indices. Each batch carries
// batch_size / classes items of every class; smaller classes are topped up by
// sampling with replacement.
std::vector<std::vector<std::size_t>> balanced_batches(const std::vector<std::size_t>& labels, std::size_t classes,
                                                        std::size_t batch_size, Rng& rng);

}  // namespace wordfuse
