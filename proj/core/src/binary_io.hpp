#pragma once

// Little-endian host assumed; checkpoint files are not meant to move across architectures.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "lsa/error.hpp"

namespace lsa::io {

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError("checkpoint truncated");
  }
  return v;
}

template <typename T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put<std::uint64_t>(os, v.size());
  if (!v.empty()) os.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <typename T>
std::vector<T> get_vec(std::istream& is, std::uint64_t max_len = (1ULL << 32)) {
  const auto n = get<std::uint64_t>(is);
  if (n > max_len) throw CheckpointError("checkpoint: implausible vector length");
  std::vector<T> v(n);
  if (n != 0 && !is.read(reinterpret_cast<char*>(v.data()), sizeof(T) * n)) {
    throw CheckpointError("checkpoint truncated");
  }
  return v;
}

inline void put_eigen(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  if (v.size() != 0) os.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}

inline Eigen::VectorXd get_eigen(std::istream& is, std::uint64_t max_len = (1ULL << 32)) {
  const auto n = get<std::uint64_t>(is);
  if (n > max_len) throw CheckpointError("checkpoint: implausible vector length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  if (n != 0 && !is.read(reinterpret_cast<char*>(v.data()), sizeof(double) * n)) {
    throw CheckpointError("checkpoint truncated");
  }
  return v;
}

inline void put_str(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& is, std::uint64_t max_len = (1ULL << 24)) {
  const auto n = get<std::uint64_t>(is);
  if (n > max_len) throw CheckpointError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (n != 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw CheckpointError("checkpoint truncated");
  }
  return s;
}

/// FNV-1a, 64-bit.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void pod(const T& v) noexcept {
    bytes(&v, sizeof(T));
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace lsa::io
