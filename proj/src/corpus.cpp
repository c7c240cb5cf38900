#include "wordfuse/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/io.hpp"

namespace wordfuse {

using nlohmann::json;

bool UtteranceRecord::operator==(const UtteranceRecord& o) const {
  auto same_timestamps = [](const auto& a, const auto& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    if (a->size() != b->size()) return false;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const auto& x = (*a)[i];
      const auto& y = (*b)[i];
      if (x.word != y.word || x.start_seconds != y.start_seconds || x.end_seconds != y.end_seconds) return false;
    }
    return true;
  };
  return id == o.id && tokens == o.tokens && audio == o.audio && label == o.label && intervals == o.intervals &&
         speaker == o.speaker && same_timestamps(timestamps, o.timestamps);
}

std::filesystem::path Manifest::audio_path(const UtteranceRecord& r) const {
  std::filesystem::path p(r.audio);
  return p.is_absolute() ? p : base_dir / p;
}

std::size_t Manifest::class_count() const {
  std::size_t c = 0;
  for (const auto& r : records) c = std::max(c, r.label + 1);
  return c;
}

const UtteranceRecord& Manifest::find(const std::string& id) const {
  for (const auto& r : records)
    if (r.id == id) return r;
  fail(ErrorKind::kListing, "no utterance with id '" + id + "'");
}

namespace {

UtteranceRecord parse_record(const json& j, std::size_t line) {
  auto bad = [line](const std::string& what) {
    fail(ErrorKind::kManifest, "line " + std::to_string(line) + ": " + what);
  };
  if (!j.is_object()) bad("record is not an object");
  if (j.contains("schema") && j.at("schema") != kManifestSchemaVersion) {
    bad("unsupported schema version " + j.at("schema").dump());
  }
  UtteranceRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    const json& tr = j.at("transcript");
    if (tr.is_string()) r.tokens = tokenize(tr.get<std::string>());
    else r.tokens = tr.get<std::vector<std::string>>();
    r.audio = j.value("audio", std::string());
    const auto label = j.at("label").get<long long>();
    if (label < 0) bad("negative label");
    r.label = static_cast<std::size_t>(label);
    if (j.contains("speaker") && !j.at("speaker").is_null()) r.speaker = j.at("speaker").get<std::string>();
    if (j.contains("intervals") && !j.at("intervals").is_null()) {
      std::vector<WordInterval> ivs;
      for (const auto& iv : j.at("intervals")) {
        const auto s = iv.at(0).get<long long>(), e = iv.at(1).get<long long>();
        if (s < 0 || e <= s) bad("interval [" + std::to_string(s) + ", " + std::to_string(e) + ") is empty or negative");
        ivs.push_back(WordInterval{ivs.size(), static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
      }
      r.intervals = std::move(ivs);
    }
    if (j.contains("timestamps") && !j.at("timestamps").is_null()) {
      std::vector<TimedWord> ts;
      for (const auto& t : j.at("timestamps"))
        ts.push_back(TimedWord{t.at(0).get<std::string>(), t.at(1).get<double>(), t.at(2).get<double>()});
      r.timestamps = std::move(ts);
    }
  } catch (const json::exception& e) {
    bad(std::string("schema violation: ") + e.what());
  }
  if (r.id.empty()) bad("empty id");
  if (r.tokens.empty()) bad("empty transcript");
  if (r.intervals && r.intervals->size() != r.tokens.size()) {
    bad(std::to_string(r.tokens.size()) + " tokens but " + std::to_string(r.intervals->size()) + " intervals");
  }
  if (r.timestamps && r.timestamps->size() != r.tokens.size()) {
    bad(std::to_string(r.tokens.size()) + " tokens but " + std::to_string(r.timestamps->size()) + " timestamps");
  }
  if (r.intervals) {
    for (std::size_t i = 1; i < r.intervals->size(); ++i)
      if ((*r.intervals)[i].start_frame < (*r.intervals)[i - 1].end_frame) bad("intervals overlap or are out of order");
  }
  return r;
}

}  // namespace

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir, std::size_t num_classes) {
  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::kManifest, "line " + std::to_string(line_no) + ": " + e.what());
    }
    UtteranceRecord r = parse_record(j, line_no);
    if (!seen.insert(r.id).second) {
      fail(ErrorKind::kManifest, "line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
    }
    if (num_classes > 0 && r.label >= num_classes) {
      fail(ErrorKind::kManifest, "line " + std::to_string(line_no) + ": label " + std::to_string(r.label) +
                                     " outside " + std::to_string(num_classes) + " classes");
    }
    m.records.push_back(std::move(r));
  }
  if (m.records.empty()) m.warnings.push_back("manifest contains no records");
  return m;
}

Manifest load_manifest(const std::filesystem::path& path, std::size_t num_classes) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::kManifest, std::string("cannot read manifest: ") + e.what());
  }
  return parse_manifest(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."), num_classes);
}

std::string manifest_line(const UtteranceRecord& r) {
  json j;
  j["schema"] = kManifestSchemaVersion;
  j["id"] = r.id;
  j["transcript"] = r.tokens;
  j["audio"] = r.audio;
  j["label"] = r.label;
  if (r.speaker) j["speaker"] = *r.speaker;
  if (r.timestamps) {
    json ts = json::array();
    for (const auto& t : *r.timestamps) ts.push_back(json::array({t.word, t.start_seconds, t.end_seconds}));
    j["timestamps"] = ts;
  }
  if (r.intervals) {
    json ivs = json::array();
    for (const auto& iv : *r.intervals) ivs.push_back(json::array({iv.start_frame, iv.end_frame}));
    j["intervals"] = ivs;
  }
  return j.dump();
}

void save_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records) {
  std::string out;
  for (const auto& r : records) out += manifest_line(r) + "\n";
  write_file_atomic(path, out);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  auto keep = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  while (in >> word) {
    std::size_t b = 0, e = word.size();
    while (b < e && !keep(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && !keep(static_cast<unsigned char>(word[e - 1]))) --e;
    if (b == e) continue;
    std::string token = word.substr(b, e - b);
    for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(token));
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_.push_back(kUnknown);
  index_[kUnknown] = 0;
  for (const auto& t : tokens) {
    if (index_.count(t)) continue;
    index_[t] = tokens_.size();
    tokens_.push_back(t);
  }
}

Vocabulary Vocabulary::from_records(const std::vector<UtteranceRecord>& records) {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.tokens.begin(), r.tokens.end());
  return Vocabulary(std::vector<std::string>(all.begin(), all.end()));
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

std::vector<std::size_t> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<double> oov_vector(const std::string& token, std::size_t dimension, std::uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64(token)));
  std::vector<double> v(dimension);
  for (auto& x : v) x = rng.uniform(-0.25, 0.25);
  return v;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                               std::size_t dimension, std::uint64_t seed) {
  if (dimension == 0) fail(ErrorKind::kConfig, "embedding dimension must be positive");
  EmbeddingTable table;
  table.dimension = dimension;
  table.vocabulary = vocabulary;
  table.matrix = Tensor({vocabulary.size(), dimension});
  std::vector<bool> filled(vocabulary.size(), false);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kEmbeddingFile, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream fields(line);
      std::string token;
      if (!(fields >> token)) continue;
      std::vector<double> values;
      double v;
      while (fields >> v) values.push_back(v);
      if (!fields.eof()) {
        fail(ErrorKind::kEmbeddingFile, path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
      }
      if (line_no == 1 && values.size() == 1) continue;  // "count dim" header
      if (values.size() != dimension) {
        fail(ErrorKind::kEmbeddingFile, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(dimension) + " values, found " + std::to_string(values.size()));
      }
      const std::size_t id = vocabulary.id(token);
      if (id == 0 && token != Vocabulary::kUnknown) continue;
      if (filled[id]) continue;
      std::copy(values.begin(), values.end(), table.matrix.storage().begin() + id * dimension);
      filled[id] = true;
      ++table.from_file;
    }
  }
  for (std::size_t id = 0; id < vocabulary.size(); ++id) {
    if (filled[id]) continue;
    const auto v = oov_vector(vocabulary.token(id), dimension, seed);
    std::copy(v.begin(), v.end(), table.matrix.storage().begin() + id * dimension);
  }
  return table;
}

std::vector<DatasetSplit> make_splits(const std::vector<UtteranceRecord>& records, const SplitConfig& config) {
  if (config.folds == 0) fail(ErrorKind::kConfig, "folds must be at least 1");
  if (!(config.test_fraction >= 0.0 && config.test_fraction < 1.0)) {
    fail(ErrorKind::kConfig, "test fraction must lie in [0, 1)");
  }
  Rng rng(config.seed);
  std::vector<std::string> test;
  std::vector<std::vector<std::string>> fold_members(config.folds);

  if (!config.speaker_independent) {
    std::map<std::size_t, std::vector<std::string>> by_class;
    for (const auto& r : records) by_class[r.label].push_back(r.id);
    std::size_t cursor = 0;  // keeps fold sizes balanced across classes
    for (auto& [label, ids] : by_class) {
      if (ids.size() < config.folds) {
        fail(ErrorKind::kSplit, "class " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                                    " samples, fewer than " + std::to_string(config.folds) + " folds");
      }
      rng.shuffle(ids);
      const auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * static_cast<double>(ids.size())));
      test.insert(test.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
      for (std::size_t k = n_test; k < ids.size(); ++k) fold_members[cursor++ % config.folds].push_back(ids[k]);
    }
  } else {
    std::map<std::string, std::vector<std::string>> by_speaker;
    for (const auto& r : records) {
      if (!r.speaker) fail(ErrorKind::kSplit, "speaker-independent split needs a speaker for '" + r.id + "'");
      by_speaker[*r.speaker].push_back(r.id);
    }
    std::vector<std::string> speakers;
    for (const auto& [s, ids] : by_speaker) speakers.push_back(s);
    rng.shuffle(speakers);
    const auto want_test = static_cast<std::size_t>(std::lround(config.test_fraction * static_cast<double>(records.size())));
    std::size_t k = 0;
    while (k < speakers.size() && test.size() < want_test) {
      const auto& ids = by_speaker[speakers[k++]];
      test.insert(test.end(), ids.begin(), ids.end());
    }
    const std::size_t pool_speakers = speakers.size() - k;
    if (pool_speakers < config.folds || pool_speakers == 0) {
      fail(ErrorKind::kSplit, std::to_string(pool_speakers) + " training speakers cannot fill " +
                                  std::to_string(config.folds) + " speaker-disjoint folds");
    }
    // Greedy: next speaker goes to the currently smallest fold.
    for (; k < speakers.size(); ++k) {
      auto smallest = std::min_element(fold_members.begin(), fold_members.end(),
                                       [](const auto& a, const auto& b) { return a.size() < b.size(); });
      const auto& ids = by_speaker[speakers[k]];
      smallest->insert(smallest->end(), ids.begin(), ids.end());
    }
  }

  std::vector<DatasetSplit> splits;
  for (std::size_t f = 0; f < config.folds; ++f) {
    DatasetSplit s;
    s.test = test;
    s.fold_index = f;
    if (config.folds > 1) s.validation = fold_members[f];
    for (std::size_t g = 0; g < config.folds; ++g)
      if (g != f || config.folds == 1) s.train.insert(s.train.end(), fold_members[g].begin(), fold_members[g].end());
    splits.push_back(std::move(s));
  }
  return splits;
}

std::vector<std::vector<std::size_t>> balanced_batches(const std::vector<std::size_t>& labels, std::size_t classes,
                                                        std::size_t batch_size, Rng& rng) {
  if (classes == 0) fail(ErrorKind::kConfig, "need at least one class");
  if (batch_size == 0) fail(ErrorKind::kConfig, "batch size must be positive");
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) fail(ErrorKind::kInput, "label " + std::to_string(labels[i]) + " out of range");
    by_class[labels[i]].push_back(i);
  }
  std::size_t largest = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (by_class[c].empty()) fail(ErrorKind::kSplit, "class " + std::to_string(c) + " has no training samples");
    largest = std::max(largest, by_class[c].size());
  }
  // Remainder policy: when batch_size is not a multiple of the class count the
  // batch shrinks to quota·classes; the quota is never below one.
  const std::size_t quota = std::max<std::size_t>(1, batch_size / classes);
  const std::size_t n_batches = (largest + quota - 1) / quota;
  std::vector<std::vector<std::size_t>> streams(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    auto order = by_class[c];
    rng.shuffle(order);
    streams[c] = order;
    while (streams[c].size() < n_batches * quota) streams[c].push_back(by_class[c][rng.below(by_class[c].size())]);
  }
  std::vector<std::vector<std::size_t>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t q = 0; q < quota; ++q) batches[b].push_back(streams[c][b * quota + q]);
  }
  return batches;
}

}  // namespace wordfuse
