#pragma once

#include "bcwave/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bcwave::io {

/// Writes doubles as little-endian IEEE-754 binary64, in order.
void write_f64(const std::filesystem::path& path, std::span<const double> data);

/// Reads exactly `count` doubles; IntegrityError on size mismatch.
std::vector<double> read_f64(const std::filesystem::path& path, std::size_t count);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols);

/// 64-bit FNV-1a, used for provenance fingerprints (not for security).
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_doubles(std::span<const double> data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex(std::uint64_t h);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace bcwave::io
