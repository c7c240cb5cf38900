#include "wordfuse/feature_cache.hpp"

#include <algorithm>
#include <set>

#include "wordfuse/align.hpp"
#include "wordfuse/binary.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/io.hpp"
#include "wordfuse/wav.hpp"

namespace wordfuse {
namespace {

constexpr char kMagic[8] = {'W', 'F', 'C', 'A', 'C', 'H', 'E', '\n'};
constexpr char kTrailer[8] = {'W', 'F', 'I', 'N', 'D', 'E', 'X', '\n'};

void write_entry(ByteWriter& w, const CacheEntry& e) {
  w.put_string(e.id);
  w.put<std::uint64_t>(e.hash);
  w.put<std::uint64_t>(e.label);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(e.tokens.size()));
  for (const auto& t : e.tokens) w.put_string(t);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(e.intervals.size()));
  for (const auto& iv : e.intervals) {
    w.put<std::uint64_t>(iv.start_frame);
    w.put<std::uint64_t>(iv.end_frame);
  }
  w.put<std::uint64_t>(e.mfsc.words);
  w.put<std::uint64_t>(e.mfsc.bands);
  w.put<std::uint64_t>(e.mfsc.frames);
  for (auto n : e.mfsc.valid_frames) w.put<std::uint64_t>(n);
  w.put_doubles(e.mfsc.values);
  w.put<std::uint64_t>(e.embedded.rows());
  w.put<std::uint64_t>(e.embedded.cols());
  w.put_doubles(e.embedded.storage());
}

CacheEntry read_entry(std::string_view blob) {
  ByteReader r(blob, "feature cache entry");
  CacheEntry e;
  e.id = r.get_string();
  e.hash = r.get<std::uint64_t>();
  e.label = r.get<std::uint64_t>();
  e.tokens.resize(r.get<std::uint32_t>());
  for (auto& t : e.tokens) t = r.get_string();
  e.intervals.resize(r.get<std::uint32_t>());
  for (std::size_t i = 0; i < e.intervals.size(); ++i) {
    e.intervals[i].word_index = i;
    e.intervals[i].start_frame = r.get<std::uint64_t>();
    e.intervals[i].end_frame = r.get<std::uint64_t>();
  }
  e.mfsc.words = r.get<std::uint64_t>();
  e.mfsc.bands = r.get<std::uint64_t>();
  e.mfsc.frames = r.get<std::uint64_t>();
  e.mfsc.valid_frames.resize(e.mfsc.words);
  for (auto& n : e.mfsc.valid_frames) n = r.get<std::uint64_t>();
  e.mfsc.values = r.get_doubles();
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  e.embedded = Tensor({rows, cols}, r.get_doubles());
  if (e.mfsc.values.size() != e.mfsc.words * e.mfsc.bands * e.mfsc.frames || e.tokens.size() != e.mfsc.words) {
    fail(ErrorKind::kFormat, "feature cache entry '" + e.id + "' is inconsistent");
  }
  return e;
}

}  // namespace

nlohmann::json FeatureConfig::to_json() const {
  return {{"window_ms", mfsc.window_ms},
          {"hop_ms", mfsc.hop_ms},
          {"fft_size", mfsc.fft_size},
          {"n_filters", mfsc.n_filters},
          {"f_min", mfsc.f_min},
          {"f_max", mfsc.f_max},
          {"preemphasis", mfsc.preemphasis},
          {"preemphasis_coefficient", mfsc.preemphasis_coefficient},
          {"log_floor", mfsc.log_floor},
          {"max_word_frames", max_word_frames},
          {"embedding_dim", embedding_dim},
          {"embeddings", embeddings.string()},
          {"embedding_seed", embedding_seed}};
}

std::vector<WordInterval> record_intervals(const UtteranceRecord& record, std::size_t n_frames, double hop_ms) {
  if (record.intervals) {
    if (record.intervals->size() != record.tokens.size()) {
      fail(ErrorKind::kManifest, std::to_string(record.intervals->size()) + " intervals for " +
                                     std::to_string(record.tokens.size()) + " words");
    }
    validate_intervals(*record.intervals, n_frames);
    return *record.intervals;
  }
  if (record.timestamps) return ingest_timestamps(*record.timestamps, hop_ms, n_frames, record.tokens.size());
  fail(ErrorKind::kAlignment, "no word intervals or timestamps; run align first");
}

CacheEntry extract_entry(const UtteranceRecord& record, const AudioBuffer& audio, const FeatureConfig& config,
                         const EmbeddingTable& table) {
  if (table.dimension != config.embedding_dim) fail(ErrorKind::kConfig, "embedding table dimension differs from the configuration");
  const MelFilterBank bank = build_filterbank(audio.sample_rate, config.mfsc);
  const FrameMatrix frames = extract_mfsc(audio, bank, config.mfsc);
  CacheEntry e;
  e.id = record.id;
  e.label = record.label;
  e.tokens = record.tokens;
  e.intervals = record_intervals(record, frames.size(), config.mfsc.hop_ms);
  const std::vector<std::vector<WordInterval>> one{e.intervals};
  e.mfsc = word_mfsc_map(frames, e.intervals, padded_length(one, config.max_word_frames));
  e.embedded = Tensor({record.tokens.size(), config.embedding_dim});
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    const std::string& token = record.tokens[i];
    const std::size_t id = table.vocabulary.id(token);
    std::vector<double> row;
    if (id != 0 || token == Vocabulary::kUnknown) {
      row.assign(table.matrix.storage().begin() + static_cast<std::ptrdiff_t>(id * table.dimension),
                 table.matrix.storage().begin() + static_cast<std::ptrdiff_t>((id + 1) * table.dimension));
    } else {
      row = oov_vector(token, config.embedding_dim, config.embedding_seed);
    }
    std::copy(row.begin(), row.end(), e.embedded.storage().begin() + static_cast<std::ptrdiff_t>(i * config.embedding_dim));
  }
  return e;
}

FeatureCache FeatureCache::load(const std::filesystem::path& path) {
  FeatureCache cache;
  if (!std::filesystem::exists(path)) return cache;
  const std::string bytes = read_file(path);
  const std::size_t tail = sizeof(std::uint64_t) + sizeof(std::uint32_t) + sizeof kTrailer;
  if (bytes.size() < sizeof kMagic + 4 + tail || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0 ||
      std::memcmp(bytes.data() + bytes.size() - sizeof kTrailer, kTrailer, sizeof kTrailer) != 0) {
    fail(ErrorKind::kFormat, path.string() + " is not a feature cache");
  }
  ByteReader trailer(std::string_view(bytes).substr(bytes.size() - tail), "feature cache trailer");
  const auto index_offset = trailer.get<std::uint64_t>();
  const auto stored_crc = trailer.get<std::uint32_t>();
  const std::string_view body(bytes.data(), bytes.size() - tail);
  if (crc32_of(body) != stored_crc) fail(ErrorKind::kFormat, path.string() + ": checksum mismatch");
  ByteReader head(body, "feature cache header");
  head.take(sizeof kMagic);
  const auto version = head.get<std::uint32_t>();
  if (version != kVersion) fail(ErrorKind::kFormat, path.string() + ": unsupported cache version " + std::to_string(version));
  if (index_offset > body.size()) fail(ErrorKind::kFormat, path.string() + ": index offset out of range");
  ByteReader index(body.substr(index_offset), "feature cache index");
  const auto count = index.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string id = index.get_string();
    const auto offset = index.get<std::uint64_t>();
    const auto length = index.get<std::uint64_t>();
    index.get<std::uint64_t>();
    if (offset + length > index_offset) fail(ErrorKind::kFormat, path.string() + ": entry '" + id + "' out of range");
    CacheEntry e = read_entry(body.substr(offset, length));
    if (e.id != id) fail(ErrorKind::kFormat, path.string() + ": index and entry disagree on '" + id + "'");
    cache.entries_[id] = std::move(e);
  }
  return cache;
}

void FeatureCache::save(const std::filesystem::path& path) const {
  ByteWriter w;
  w.append(std::string_view(kMagic, sizeof kMagic));
  w.put<std::uint32_t>(kVersion);
  struct Slot {
    std::string id;
    std::uint64_t offset, length, hash;
  };
  std::vector<Slot> slots;
  for (const auto& [id, e] : entries_) {
    const std::size_t start = w.size();
    write_entry(w, e);
    slots.push_back({id, start, w.size() - start, e.hash});
  }
  const std::uint64_t index_offset = w.size();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(slots.size()));
  for (const auto& s : slots) {
    w.put_string(s.id);
    w.put<std::uint64_t>(s.offset);
    w.put<std::uint64_t>(s.length);
    w.put<std::uint64_t>(s.hash);
  }
  const std::uint32_t c = crc32_of(w.bytes());
  w.put<std::uint64_t>(index_offset);
  w.put<std::uint32_t>(c);
  w.append(std::string_view(kTrailer, sizeof kTrailer));
  write_file_atomic(path, w.bytes());
}

const CacheEntry* FeatureCache::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

const CacheEntry& FeatureCache::get(const std::string& id) const {
  const CacheEntry* e = find(id);
  if (!e) fail(ErrorKind::kListing, "utterance '" + id + "' is not in the feature cache; run extract");
  return *e;
}

void FeatureCache::put(CacheEntry entry) { entries_[entry.id] = std::move(entry); }

std::vector<std::string> FeatureCache::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

std::uint64_t entry_hash(const UtteranceRecord& record, std::string_view audio_bytes, const FeatureConfig& config,
                         std::uint64_t embeddings_digest) {
  std::uint64_t h = fnv1a64(audio_bytes);
  UtteranceRecord key = record;
  key.audio.clear();
  key.speaker.reset();
  h = fnv1a64(manifest_line(key), h);
  h = fnv1a64(config.to_json().dump(), h);
  return mix_seed(h, embeddings_digest);
}

ExtractReport extract_features(const Manifest& manifest, const FeatureConfig& config, FeatureCache& cache) {
  ExtractReport report;
  const EmbeddingTable table = load_embeddings(config.embeddings, Vocabulary::from_records(manifest.records),
                                               config.embedding_dim, config.embedding_seed);
  const std::uint64_t digest = config.embeddings.empty() ? 0 : fnv1a64(read_file(config.embeddings));
  for (const auto& record : manifest.records) {
    try {
      const auto path = manifest.audio_path(record);
      const std::string bytes = read_file(path);
      const std::uint64_t h = entry_hash(record, bytes, config, digest);
      if (const CacheEntry* e = cache.find(record.id); e && e->hash == h) {
        ++report.reused;
        continue;
      }
      CacheEntry e = extract_entry(record, read_wav(path), config, table);
      e.hash = h;
      cache.put(std::move(e));
      ++report.computed;
    } catch (const Error& err) {
      report.failures.push_back(record.id + ": " + err.what());
    }
  }
  return report;
}

MfscMap pad_map(const MfscMap& map, std::size_t frames) {
  MfscMap out;
  out.words = map.words;
  out.bands = map.bands;
  out.frames = frames;
  out.values.assign(out.words * out.bands * frames, 0.0);
  for (std::size_t w = 0; w < map.words; ++w) {
    const std::size_t n = std::min(map.valid_frames[w], frames);
    out.valid_frames.push_back(n);
    for (std::size_t b = 0; b < map.bands; ++b)
      for (std::size_t j = 0; j < n; ++j) out.at(w, b, j) = map.at(w, b, j);
  }
  return out;
}

std::size_t dataset_padded_length(const FeatureCache& cache, const std::vector<std::string>& ids) {
  std::size_t L = 0;
  for (const auto& id : ids)
    for (auto n : cache.get(id).mfsc.valid_frames) L = std::max(L, n);
  return L;
}

std::vector<ModelInput> make_inputs(const FeatureCache& cache, const std::vector<std::string>& ids,
                                    const Vocabulary& vocabulary, std::optional<std::size_t> padded_length) {
  const std::size_t L = padded_length ? *padded_length : dataset_padded_length(cache, ids);
  std::vector<ModelInput> out;
  for (const auto& id : ids) {
    const CacheEntry& e = cache.get(id);
    out.push_back(ModelInput{id, vocabulary.ids(e.tokens), pad_map(e.mfsc, L), e.label});
  }
  return out;
}

EmbeddingTable table_from_cache(const FeatureCache& cache, const std::vector<std::string>& ids, std::uint64_t seed) {
  std::set<std::string> tokens;
  std::size_t dim = 0;
  for (const auto& id : ids) {
    const CacheEntry& e = cache.get(id);
    tokens.insert(e.tokens.begin(), e.tokens.end());
    dim = e.embedded.cols();
  }
  if (dim == 0) fail(ErrorKind::kInput, "no cached utterances to build an embedding table from");
  EmbeddingTable table;
  table.dimension = dim;
  table.vocabulary = Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
  table.matrix = Tensor({table.vocabulary.size(), dim});
  std::vector<bool> filled(table.vocabulary.size(), false);
  auto fill_row = [&](std::size_t row, const double* src) {
    std::copy(src, src + dim, table.matrix.storage().begin() + static_cast<std::ptrdiff_t>(row * dim));
    filled[row] = true;
  };
  for (const auto& id : ids) {
    const CacheEntry& e = cache.get(id);
    for (std::size_t i = 0; i < e.tokens.size(); ++i) {
      const std::size_t row = table.vocabulary.id(e.tokens[i]);
      if (!filled[row]) fill_row(row, e.embedded.storage().data() + i * dim);
    }
  }
  const auto unk = oov_vector(Vocabulary::kUnknown, dim, seed);
  if (!filled[0]) fill_row(0, unk.data());
  return table;
}

}  // namespace wordfuse
