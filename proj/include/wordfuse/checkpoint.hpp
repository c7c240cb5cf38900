#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "wordfuse/model.hpp"

namespace wordfuse {

// Layout (little-endian):
//   "WFCKPT\r\n" | u32 version | u64 header length | header JSON
//   | u32 parameter count | per parameter: u32 name length, name, u8 trainable,
//     u32 rank, u64 dims…, f64 values… | u32 CRC-32 of everything before it
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const Model& model);
std::unique_ptr<Model> model_from_checkpoint_bytes(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Model& model);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path);

}  // namespace wordfuse
