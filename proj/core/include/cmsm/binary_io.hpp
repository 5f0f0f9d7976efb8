#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cmsm/errors.hpp"

namespace cmsm::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Append-only little-endian byte buffer.
class Writer {
public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto const *p = reinterpret_cast<std::uint8_t const *>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void put_bytes(std::vector<std::uint8_t> const &b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  [[nodiscard]] std::vector<std::uint8_t> const &bytes() const { return bytes_; }

private:
  std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked little-endian reader; running past the end throws TruncatedError.
class Reader {
public:
  Reader(std::vector<std::uint8_t> bytes, std::string what) : bytes_(std::move(bytes)), what_(std::move(what)) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<char const *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] std::string const &what() const { return what_; }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedError(what_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                           std::to_string(pos_) + ", file has " + std::to_string(bytes_.size()) + ")");
    }
  }

private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

/// A short file whose bytes are a prefix of `magic` is truncated; anything else that differs is bad magic.
inline void expect_magic(Reader &r, std::string_view magic) {
  std::string const head = r.get_string(std::min(r.remaining(), magic.size()));
  if (head != magic.substr(0, head.size())) {
    throw BadMagicError(r.what() + ": bad magic bytes (expected " + std::string(magic) + ")");
  }
  r.need(magic.size() - head.size());
}

[[nodiscard]] std::vector<std::uint8_t> read_file(std::filesystem::path const &path);

/// Write to `path.tmp` and rename over `path`, so readers never see a partial file.
void write_file_atomic(std::filesystem::path const &path, std::vector<std::uint8_t> const &bytes);
void write_file_atomic(std::filesystem::path const &path, std::string_view text);

}  // namespace cmsm::io
