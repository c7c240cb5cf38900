#include "wordfuse/checkpoint.hpp"

#include <cstring>
#include <set>

#include "wordfuse/binary.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/io.hpp"

namespace wordfuse {
namespace {

constexpr char kMagic[8] = {'W', 'F', 'C', 'K', 'P', 'T', '\r', '\n'};

}  // namespace

std::string checkpoint_bytes(const Model& model) {
  nlohmann::json header = {{"model", model.config().to_json()},
                           {"vocabulary", model.vocabulary().tokens()},
                           {"metadata", model.metadata}};
  const std::string h = header.dump();
  ByteWriter w;
  w.append(std::string_view(kMagic, sizeof kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(h.size());
  w.append(h);
  const auto& params = model.parameters().all();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.put_string(p.name);
    w.put<std::uint8_t>(p.trainable ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.put<std::uint64_t>(d);
    for (double v : p.value.storage()) w.put<double>(v);
  }
  w.put<std::uint32_t>(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

std::unique_ptr<Model> model_from_checkpoint_bytes(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::kFormat, "not a checkpoint file");
  }
  const std::string_view body(bytes.data(), bytes.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (stored != crc32_of(body)) fail(ErrorKind::kFormat, "checkpoint checksum mismatch");
  ByteReader r(body, "checkpoint");
  r.take(sizeof kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kFormat, "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("checkpoint header: ") + e.what());
  }
  const ModelConfig config = ModelConfig::from_json(header.at("model"));
  auto tokens = header.at("vocabulary").get<std::vector<std::string>>();
  if (tokens.empty() || tokens[0] != Vocabulary::kUnknown) fail(ErrorKind::kFormat, "checkpoint vocabulary is malformed");
  tokens.erase(tokens.begin());
  auto model = std::make_unique<Model>(Model::RestoreTag{}, config, Vocabulary(tokens));
  model->metadata = header.value("metadata", nlohmann::json::object());
  const auto count = r.get<std::uint32_t>();
  if (count != model->parameters().size()) {
    fail(ErrorKind::kFormat, "checkpoint holds " + std::to_string(count) + " parameters, model defines " +
                                 std::to_string(model->parameters().size()));
  }
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.get_string();
    if (!seen.insert(name).second) fail(ErrorKind::kFormat, "checkpoint repeats parameter '" + name + "'");
    r.get<std::uint8_t>();
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::uint64_t>();
    Parameter* p = model->parameters().find(name);
    if (!p) fail(ErrorKind::kFormat, "checkpoint parameter '" + name + "' is unknown to the model");
    if (p->value.shape() != shape) {
      fail(ErrorKind::kFormat, "checkpoint parameter '" + name + "' has shape " + shape_string(shape) + ", expected " +
                                   shape_string(p->value.shape()));
    }
    for (auto& v : p->value.storage()) v = r.get<double>();
  }
  if (r.remaining() != 0) fail(ErrorKind::kFormat, "trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  write_file_atomic(path, checkpoint_bytes(model));
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path) {
  return model_from_checkpoint_bytes(read_file(path));
}

}  // namespace wordfuse
