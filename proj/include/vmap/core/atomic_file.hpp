#pragma once

#include <filesystem>
#include <string_view>

namespace vmap {

// Writes to a sibling temporary file, then renames over `path`, so readers
// never observe a partial file. Throws std::runtime_error on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vmap
