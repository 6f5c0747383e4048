#ifndef INSIDER_IO_H_
#define INSIDER_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace insider {

// Writes through a sibling temp file and renames it into place, so readers
// never observe a partially written artifact. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Throws IoError naming the path if it cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace insider

#endif  // INSIDER_IO_H_
