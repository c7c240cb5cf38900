#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordfuse/corpus.hpp"
#include "wordfuse/dsp.hpp"
#include "wordfuse/model.hpp"

namespace wordfuse {

struct FeatureConfig {
  MfscConfig mfsc;
  std::size_t max_word_frames = 100;  // L cap
  std::size_t embedding_dim = 300;
  std::filesystem::path embeddings;    // empty: every token gets a seeded random vector
  std::uint64_t embedding_seed = 0;

  nlohmann::json to_json() const;
};

struct CacheEntry {
  std::string id;
  std::uint64_t hash = 0;
  std::size_t label = 0;
  std::vector<std::string> tokens;
  std::vector<WordInterval> intervals;
  MfscMap mfsc;     // padded to this utterance's longest word (≤ the cap)
  Tensor embedded;  // N × embedding_dim
};

// Word intervals of a record: explicit intervals, else converted timestamps.
std::vector<WordInterval> record_intervals(const UtteranceRecord& record, std::size_t n_frames, double hop_ms);

CacheEntry extract_entry(const UtteranceRecord& record, const AudioBuffer& audio, const FeatureConfig& config,
                         const EmbeddingTable& table);

// Single container file: magic, version, entry blobs, then an id → offset
// index and a trailer pointing at it. Saving rewrites the file atomically.
class FeatureCache {
 public:
  static constexpr std::uint32_t kVersion = 1;

  static FeatureCache load(const std::filesystem::path& path);  // missing file → empty cache
  void save(const std::filesystem::path& path) const;

  const CacheEntry* find(const std::string& id) const;
  const CacheEntry& get(const std::string& id) const;
  void put(CacheEntry entry);
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, CacheEntry> entries_;
};

struct ExtractReport {
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::vector<std::string> failures;  // "id: message"
};

// Content hash over audio bytes, transcript, intervals, label and settings.
std::uint64_t entry_hash(const UtteranceRecord& record, std::string_view audio_bytes, const FeatureConfig& config,
                         std::uint64_t embeddings_digest);

ExtractReport extract_features(const Manifest& manifest, const FeatureConfig& config, FeatureCache& cache);

// Pads every map to the longest word over the given entries and maps tokens
// through the vocabulary.
std::vector<ModelInput> make_inputs(const FeatureCache& cache, const std::vector<std::string>& ids,
                                    const Vocabulary& vocabulary, std::optional<std::size_t> padded_length = {});
std::size_t dataset_padded_length(const FeatureCache& cache, const std::vector<std::string>& ids);
MfscMap pad_map(const MfscMap& map, std::size_t frames);

// Vocabulary over the given entries' tokens with rows copied from their
// cached embedded matrices.
EmbeddingTable table_from_cache(const FeatureCache& cache, const std::vector<std::string>& ids, std::uint64_t seed);

}  // namespace wordfuse
