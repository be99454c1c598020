#include "ttcast/util.hpp"

#include <zlib.h>

#include <fstream>

#include "ttcast/errors.hpp"

namespace ttcast::util {

std::uint32_t crc32_bytes(const void* data, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  std::vector<char> buf(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in) throw IoError("short read on '" + path + "'");
  return buf;
}

void write_file(const std::string& path, const void* data, std::size_t len) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!out) throw IoError("short write on '" + path + "'");
}

}  // namespace ttcast::util
