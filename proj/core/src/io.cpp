#include "bcwave/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bcwave::io {

static_assert(std::endian::native == std::endian::little,
              "binary persistence assumes a little-endian host");

void write_f64(const std::filesystem::path& path, std::span<const double> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size_bytes()));
  if (!out) throw IntegrityError("write failed: " + path.string());
}

std::vector<double> read_f64(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IntegrityError("cannot open: " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * sizeof(double)) {
    throw IntegrityError(path.string() + ": expected " + std::to_string(count) +
                         " float64 values, file holds " + std::to_string(bytes) + " bytes");
  }
  in.seekg(0);
  std::vector<double> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IntegrityError("read failed: " + path.string());
  return data;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_f64(path, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Matrix read_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  auto data = read_f64(path, rows * cols);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(m.data(), data.data(), data.size() * sizeof(double));
  return m;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  return fnv1a(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()), seed);
}

std::uint64_t hash_doubles(std::span<const double> data, std::uint64_t seed) {
  return fnv1a(std::span(reinterpret_cast<const unsigned char*>(data.data()), data.size_bytes()),
               seed);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    h = fnv1a(std::span(reinterpret_cast<const unsigned char*>(buf.data()), got), h);
  }
  return h;
}

std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IntegrityError("cannot open for writing: " + path.string());
  out << text;
}

}  // namespace bcwave::io
