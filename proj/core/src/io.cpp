#include "ibgeo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ibgeo {

std::uint64_t config_hash(const std::string& canonical_config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_header(const std::string& canonical_config) {
  std::ostringstream os;
  os << "# config=" << std::hex << config_hash(canonical_config) << std::dec
     << ' ' << canonical_config << '\n';
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace ibgeo
