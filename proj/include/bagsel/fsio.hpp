#pragma once

#include <filesystem>
#include <string>

namespace bagsel {

/// Read a whole file; throws IngestError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Write content to a temporary sibling and atomically rename it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit hash, hex-encoded; used for config/content provenance hashes.
std::string fnv1a_hex(const std::string& data);

}  // namespace bagsel
