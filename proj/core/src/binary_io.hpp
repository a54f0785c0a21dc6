#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "evor/errors.hpp"

namespace evor::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume little endian");

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& buf, std::string what)
      : buf_(buf), what_(std::move(what)) {}

  template <class T>
  T get() {
    T v;
    get_raw(&v, sizeof(T));
    return v;
  }
  void get_raw(void* out, std::size_t n) {
    if (pos_ + n > buf_.size()) throw ParseError(what_ + ": truncated at byte " + std::to_string(pos_));
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_str() {
    const auto n = get<std::uint32_t>();
    if (n > buf_.size() - pos_) throw ParseError(what_ + ": string length out of range");
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace evor::detail
