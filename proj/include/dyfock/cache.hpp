#pragma once

// Disk memo for operator expansions. Entries are files named by the FNV-1a
// hash of the memo key; the key itself is stored in the file and compared on
// read, so a hash collision is a miss, not a wrong answer.

#include "dyfock/ops.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>

namespace dyfock {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

/// Text form: "lowest hi order count", then per term "@ p" and the vector text.
inline std::string serialize(const Expansion& e) {
  std::ostringstream os;
  os << e.lowest << ' ' << e.hi << ' ' << e.order << ' ' << e.terms.size() << '\n';
  for (const auto& [p, v] : e.terms) os << "@ " << p << '\n' << serialize(v) << "@end\n";
  return os.str();
}

inline Expansion parse_expansion(const std::string& text) {
  std::istringstream in(text);
  Expansion e;
  std::size_t count = 0;
  if (!(in >> e.lowest >> e.hi >> e.order >> count)) throw std::invalid_argument("malformed expansion header");
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line) || line.rfind("@ ", 0) != 0) throw std::invalid_argument("malformed expansion term");
    const int p = std::stoi(line.substr(2));
    std::string body;
    while (std::getline(in, line) && line != "@end") body += line + '\n';
    e.terms.emplace(p, parse_fock_vector(body));
  }
  return e;
}

class DiskCache final : public ExpandMemo {
 public:
  explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  /// DYFOCK_CACHE_DIR overrides the given directory; empty means no cache.
  static std::string resolve_dir(const std::string& requested) {
    if (const char* env = std::getenv("DYFOCK_CACHE_DIR"); env && *env) return env;
    return requested;
  }

  bool get(const std::string& key, Expansion& out) override {
    std::lock_guard<std::mutex> lock(mu_);
    std::ifstream in(path(key));
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const std::string header = std::to_string(key.size()) + '\n';
    if (text.compare(0, header.size(), header) != 0 || text.compare(header.size(), key.size(), key) != 0) return false;
    out = parse_expansion(text.substr(header.size() + key.size()));
    ++hits_;
    return true;
  }

  void put(const std::string& key, const Expansion& e) override {
    std::lock_guard<std::mutex> lock(mu_);
    const auto target = path(key);
    const auto tmp = target.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << key.size() << '\n' << key << serialize(e);
    }
    std::filesystem::rename(tmp, target);
    ++stores_;
  }

  std::size_t hits() const { return hits_; }
  std::size_t stores() const { return stores_; }

 private:
  std::filesystem::path path(const std::string& key) const { return dir_ / (hex64(fnv1a(key)) + ".exp"); }

  std::filesystem::path dir_;
  std::mutex mu_;
  std::size_t hits_ = 0, stores_ = 0;
};

/// Installs a memo for the lifetime of the guard.
class MemoGuard {
 public:
  explicit MemoGuard(ExpandMemo* m) : prev_(expand_memo()) { expand_memo() = m; }
  ~MemoGuard() { expand_memo() = prev_; }
  MemoGuard(const MemoGuard&) = delete;
  MemoGuard& operator=(const MemoGuard&) = delete;

 private:
  ExpandMemo* prev_;
};

}  // namespace dyfock
