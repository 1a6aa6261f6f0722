#ifndef GQA_COMMON_HPP
#define GQA_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gqa {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad header, unreadable field, non-finite value).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input data violates an operation's contract (empty cloud, bad range, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-finite loss or gradient, degenerate solve).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Finalizer of splitmix64; a good 64-bit scrambler.
constexpr std::uint64_t scramble64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministically derives a sub-seed from a master seed and a stream id.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return scramble64(master ^ scramble64(stream));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b, std::uint64_t c) {
  return derive_seed(derive_seed(master, a, b), c);
}

/// FNV-1a hash of a byte string; used for id hashing and config digests.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gqa

#endif  // GQA_COMMON_HPP
