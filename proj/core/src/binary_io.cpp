#include "cmsm/binary_io.hpp"

#include <fstream>
#include <iterator>

namespace cmsm::io {

std::vector<std::uint8_t> read_file(std::filesystem::path const &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

void write_atomic(std::filesystem::path const &path, char const *data, std::size_t n) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(n));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_file_atomic(std::filesystem::path const &path, std::vector<std::uint8_t> const &bytes) {
  write_atomic(path, reinterpret_cast<char const *>(bytes.data()), bytes.size());
}

void write_file_atomic(std::filesystem::path const &path, std::string_view text) {
  write_atomic(path, text.data(), text.size());
}

}  // namespace cmsm::io
