#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace chronoarray {

using Word = std::uint64_t;
using Addr = std::uint64_t;

// Result of a cell query: the stored payload, or empty if the cell was
// never written at the queried version.
using Answer = std::optional<Word>;

// Reserved words. Payloads stored through the public array interface must be
// strictly below kOpenTop; the two top values are internal markers.
inline constexpr Word kNullAddr = ~Word{0};
inline constexpr Word kOpenTop = ~Word{0} - 1;

// Cost-class tag carried by every traced memory access. Numeric values match
// the binary trace dump encoding.
enum class OpClass : std::uint8_t {
  kRead = 0,
  kPersistentRead = 1,
  kWrite = 2,
  kMaintenance = 3,
};

enum class AccessKind : std::uint8_t {
  kLoad = 0,
  kStore = 1,
};

inline const char* op_class_name(OpClass c) {
  switch (c) {
    case OpClass::kRead: return "read";
    case OpClass::kPersistentRead: return "pread";
    case OpClass::kWrite: return "write";
    case OpClass::kMaintenance: return "maint";
  }
  return "?";
}

// Exact rational in (0,1), kept reduced. Used for the layout split parameter
// so level arithmetic never depends on floating point rounding.
struct Fraction {
  std::uint64_t num = 1;
  std::uint64_t den = 2;

  constexpr Fraction() = default;
  Fraction(std::uint64_t n, std::uint64_t d) : num(n), den(d) {
    if (d == 0 || n == 0 || n >= d) {
      throw std::invalid_argument("fraction must lie strictly in (0,1)");
    }
    std::uint64_t g = std::gcd(n, d);
    num = n / g;
    den = d / g;
  }

  // ceil(this * x)
  std::uint64_t ceil_mul(std::uint64_t x) const {
    return (num * x + den - 1) / den;
  }

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

// Accepts "p/q" or a finite decimal such as "0.25".
inline Fraction parse_fraction(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::uint64_t p = std::stoull(text.substr(0, slash));
    std::uint64_t q = std::stoull(text.substr(slash + 1));
    return Fraction(p, q);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    throw std::invalid_argument("expected p/q or a decimal in (0,1): " + text);
  }
  std::string whole = text.substr(0, dot);
  std::string frac = text.substr(dot + 1);
  if (frac.empty() || frac.size() > 18) {
    throw std::invalid_argument("bad decimal: " + text);
  }
  std::uint64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  std::uint64_t num = std::stoull(frac);
  if (!whole.empty() && whole != "0") {
    throw std::invalid_argument("fraction must lie strictly in (0,1): " + text);
  }
  return Fraction(num, den);
}

inline std::string format_fraction(const Fraction& f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

}  // namespace chronoarray
