#include "rearrange/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rearrange/errors.hpp"
#include "rearrange/rng.hpp"

namespace rearrange {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const std::map<std::string, std::string>& entries) {
  std::uint64_t h = fnv1a64("");
  for (const auto& [k, v] : entries) {
    h = fnv1a64(k, h);
    h = fnv1a64("=", h);
    h = fnv1a64(v, h);
    h = fnv1a64("\n", h);
  }
  return hex64(h);
}

void write_provenance(std::ostream& os, const std::string& hash, std::uint64_t seed,
                      std::uint64_t replicate) {
  os << "# config_hash=" << hash << " seed=" << seed << " replicate=" << replicate << "\n";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_sample_csv(std::ostream& os, const FieldSample& sample) {
  const auto old = os.precision(17);
  const auto d = sample.vertices.empty() ? 0 : sample.vertices.front().size();
  for (Eigen::Index i = 0; i < d; ++i) os << "z" << (i + 1) << ",";
  os << "value\n";
  for (std::size_t k = 0; k < sample.values.size(); ++k) {
    for (Eigen::Index i = 0; i < d; ++i) os << sample.vertices[k][i] << ",";
    os << sample.values[k] << "\n";
  }
  os.precision(old);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot open '" + path.string() + "' for writing");
  f << content;
  if (!f) throw InputError("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace rearrange
