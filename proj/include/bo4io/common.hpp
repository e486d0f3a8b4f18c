#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace bo4io {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base of all library errors. `exit_code()` is the CLI exit status the error maps to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments to an API call (dimension mismatch, out-of-range value).
class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Invalid or inconsistent configuration (empty domain, bad config key).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Numerical breakdown (factorization failure after jitter escalation, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// File or process I/O failure.
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Instance outside what the bundled solvers handle.
class UnsupportedInstance : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// SplitMix64 finalizer; used to derive independent seeds from composite keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the random stream identified by (seed, tag, index).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept {
  return mix64(mix64(mix64(seed) ^ tag) ^ index);
}

/// Compile-time FNV-1a hash of a purpose tag string.
constexpr std::uint64_t tag_of(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bo4io
