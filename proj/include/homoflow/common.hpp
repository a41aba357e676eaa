#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace homoflow {

using json = nlohmann::ordered_json;
using Rat = boost::multiprecision::cpp_rational;
using Int = boost::multiprecision::cpp_int;

enum class ErrorKind {
  Validation,
  NotAnEquivalence,
  BoundExceeded,
  Domain,
  Embedding,
  Unsupported,
  Config,
  Signature,
  NotACongruence,
  IncompleteMeasure,
  WitnessMismatch,
  Step,
  Param,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NotAnEquivalence: return "not-an-equivalence";
    case ErrorKind::BoundExceeded: return "bound-exceeded";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Embedding: return "embedding";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Config: return "config";
    case ErrorKind::Signature: return "signature";
    case ErrorKind::NotACongruence: return "not-a-congruence";
    case ErrorKind::IncompleteMeasure: return "incomplete-measure";
    case ErrorKind::WitnessMismatch: return "witness-mismatch";
    case ErrorKind::Step: return "step";
    case ErrorKind::Param: return "param";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg, int index = -1)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg),
        kind(kind),
        index(index) {}
  ErrorKind kind;
  int index;  // step index for certificate replay failures, else -1
};

inline std::string rat_to_string(const Rat& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

inline Rat rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rat(Int(s));
  Int p(s.substr(0, slash)), q(s.substr(slash + 1));
  if (q == 0) throw Error(ErrorKind::Validation, "rational with zero denominator: " + s);
  return Rat(p, q);
}

inline Int factorial(int n) {
  Int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline Int falling(int n, int k) {
  if (k < 0 || k > n) return 0;
  Int r = 1;
  for (int i = 0; i < k; ++i) r *= (n - i);
  return r;
}

inline Int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  return falling(n, k) / factorial(k);
}

inline Int int_pow(Int base, int exp) {
  Int r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

// Counter-mode SplitMix64: statistically solid, trivially seedable, and the
// output stream for a given seed is fixed forever (std::* distributions are
// implementation-defined, so all bounded draws are hand-rolled here).
struct Rng {
  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n) by rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) throw Error(ErrorKind::Domain, "Rng::below(0)");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  bool coin() { return next() >> 63; }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t state;
};

// Independent per-trial stream: trial t of a run seeded s draws from s XOR t.
inline Rng trial_rng(uint64_t seed, uint64_t trial) { return Rng(seed ^ trial); }

}  // namespace homoflow
