#pragma once

// Plain-text key-value files, raw little-endian tensor files and the small
// formatting helpers shared by dataset, checkpoint and report writers.

#include "rafm/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rafm {

// Shortest round-trip decimal rendering (std::to_chars), so repeated runs
// emit byte-identical text.
std::string formatDouble(Scalar v);

Scalar parseDouble(const std::string& s);
std::int64_t parseInt(const std::string& s);
std::uint64_t parseUnsigned(const std::string& s);

// ---------------------------------------------------------------------------
// Key-value text file: `key = value` lines, '#' comments, order-preserving
// writer. Used for configs, dataset indices, checkpoint headers, summaries.
// ---------------------------------------------------------------------------

class KvFile {
 public:
  KvFile() = default;

  static KvFile parse(const std::string& text);
  static KvFile load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, Scalar value);

  bool has(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  std::int64_t requireInt(const std::string& key) const;
  std::uint64_t requireUnsigned(const std::string& key) const;
  Scalar requireDouble(const std::string& key) const;

  std::int64_t getInt(const std::string& key, std::int64_t fallback) const;
  Scalar getDouble(const std::string& key, Scalar fallback) const;
  std::string getString(const std::string& key, const std::string& fallback) const;

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Raw tensor file: 16-byte header (rows, cols as little-endian uint64)
// followed by rows*cols little-endian float64 values in row-major order.
// ---------------------------------------------------------------------------

void appendU64le(std::string& out, std::uint64_t v);
void appendF64le(std::string& out, Scalar v);
std::uint64_t readU64le(const unsigned char* p);
Scalar readF64le(const unsigned char* p);

std::string encodeMatrix(const Matrix& m);
Matrix decodeMatrix(const std::string& bytes);

void saveMatrix(const Matrix& m, const std::filesystem::path& path);
Matrix loadMatrix(const std::filesystem::path& path);

void writeFile(const std::filesystem::path& path, const std::string& bytes);
std::string readFile(const std::filesystem::path& path);

// FNV-1a 64-bit, used to fingerprint datasets.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 14695981039346656037ULL);
std::string toHex(std::uint64_t v);

}  // namespace rafm
