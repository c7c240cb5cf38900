#pragma once

#include <filesystem>

#include "wordfuse/dsp.hpp"

namespace wordfuse {

enum class WavEncoding { kPcm16, kFloat32 };

// Single-channel RIFF/WAVE with 16-bit integer or 32-bit float samples.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace wordfuse
