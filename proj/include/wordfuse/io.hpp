#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace wordfuse {

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace wordfuse
