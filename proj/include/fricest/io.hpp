#ifndef FRICEST_IO_HPP_
#define FRICEST_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fricest::io {

/// Error raised for filesystem problems (missing inputs, failed writes).
class FileError : public std::runtime_error {
 public:
  explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(std::string_view data,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hash_hex(std::uint64_t h);

/// Content hash of a file with volatile fields removed. For .json artifacts
/// the document is parsed, keys listed in `volatile_keys` are dropped at any
/// nesting depth, and the compact dump is hashed; other files hash raw bytes.
std::uint64_t canonical_file_hash(
    const std::filesystem::path& path,
    const std::vector<std::string>& volatile_keys = {"wall_time_s"});

std::string read_file(const std::filesystem::path& path);

/// Write-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Deterministic %.17g formatting used by all text artifacts.
std::string format_double(double v);

}  // namespace fricest::io

#endif  // FRICEST_IO_HPP_
