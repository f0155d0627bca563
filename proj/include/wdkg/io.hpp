#ifndef WDKG_IO_HPP
#define WDKG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wdkg::io {

// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string format_double(double x);

// Writes via a sibling temp file followed by rename, so a crash never
// leaves a half-written artifact behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// Little-endian packing for checkpoint blobs, independent of host order.
void append_le_double(std::vector<std::uint8_t>& out, double x);
double read_le_double(const std::uint8_t* p);

} // namespace wdkg::io

#endif
