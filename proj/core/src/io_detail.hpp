#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "phase2vec/errors.hpp"

namespace p2v::detail {

// Little-endian primitives. The build targets little-endian hosts; access
// goes through memcpy so alignment never matters.
template <typename T>
inline void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
inline T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw io_error("file truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

inline void put_string(std::string& buf, const std::string& s) {
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(s.size()));
  buf.append(s);
}

inline std::string take_string(const std::string& buf, std::size_t& pos) {
  const auto len = take<std::uint16_t>(buf, pos);
  if (pos + len > buf.size()) throw io_error("file truncated inside a string");
  std::string s = buf.substr(pos, len);
  pos += len;
  return s;
}

inline void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

inline std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace p2v::detail
