#include "rafm/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rafm {

std::string formatDouble(Scalar v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Scalar parseDouble(const std::string& s) {
  Scalar v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("not a real number: '" + s + "'");
  return v;
}

std::int64_t parseInt(const std::string& s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("not an integer: '" + s + "'");
  return v;
}

std::uint64_t parseUnsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("not an unsigned integer: '" + s + "'");
  return v;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvFile KvFile::parse(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError("key-value parse error at line " + std::to_string(lineno) + ": '" + t + "'");
    kv.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

KvFile KvFile::load(const std::filesystem::path& path) { return parse(readFile(path)); }

void KvFile::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void KvFile::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void KvFile::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
void KvFile::set(const std::string& key, Scalar value) { set(key, formatDouble(value)); }

bool KvFile::has(const std::string& key) const { return index_.count(key) != 0; }

const std::string& KvFile::require(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw DataError("missing key '" + key + "'");
  return entries_[it->second].second;
}

std::optional<std::string> KvFile::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

std::int64_t KvFile::requireInt(const std::string& key) const { return parseInt(require(key)); }
std::uint64_t KvFile::requireUnsigned(const std::string& key) const {
  return parseUnsigned(require(key));
}
Scalar KvFile::requireDouble(const std::string& key) const { return parseDouble(require(key)); }

std::int64_t KvFile::getInt(const std::string& key, std::int64_t fallback) const {
  return has(key) ? requireInt(key) : fallback;
}
Scalar KvFile::getDouble(const std::string& key, Scalar fallback) const {
  return has(key) ? requireDouble(key) : fallback;
}
std::string KvFile::getString(const std::string& key, const std::string& fallback) const {
  return has(key) ? require(key) : fallback;
}

std::string KvFile::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void KvFile::save(const std::filesystem::path& path) const { writeFile(path, serialize()); }

void appendU64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void appendF64le(std::string& out, Scalar v) { appendU64le(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t readU64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

Scalar readF64le(const unsigned char* p) { return std::bit_cast<Scalar>(readU64le(p)); }

std::string encodeMatrix(const Matrix& m) {
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(m.size()) * 8);
  appendU64le(out, static_cast<std::uint64_t>(m.rows()));
  appendU64le(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) appendF64le(out, m(r, c));
  return out;
}

Matrix decodeMatrix(const std::string& bytes) {
  if (bytes.size() < 16) throw DataError("tensor file shorter than its 16-byte header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = readU64le(p);
  const std::uint64_t cols = readU64le(p + 8);
  const std::uint64_t count = rows * cols;
  if (bytes.size() != 16 + count * 8)
    throw DataError("tensor file payload does not match header: expected " +
                    std::to_string(count) + " values");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* q = p + 16;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c, q += 8) m(r, c) = readF64le(q);
  return m;
}

void saveMatrix(const Matrix& m, const std::filesystem::path& path) {
  writeFile(path, encodeMatrix(m));
}

Matrix loadMatrix(const std::filesystem::path& path) { return decodeMatrix(readFile(path)); }

void writeFile(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string toHex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace rafm
