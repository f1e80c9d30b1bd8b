#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace heavytail {

/// Identifies one reproducible random stream. Streams with the same seed but
/// different stream ids occupy disjoint counter ranges of the same key.
struct SeedSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  SeedSpec with_stream(std::uint64_t id) const { return {seed, id}; }
  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// SplitMix64 finalizer; used to derive child seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t value);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The 64-bit
// seed is the key; the 128-bit counter is (block index, stream id). Copying a
// generator forks an identical stream.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(SeedSpec spec);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();

  /// Skips `count` 64-bit outputs.
  void discard(std::uint64_t count);

  /// The raw bijection, exposed for known-answer tests.
  static Block encrypt(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::uint64_t stream_ = 0;
  Block buffer_{};
  int used_ = 2;  // 64-bit words consumed from buffer_
};

/// Standard normal quantile (Wichura's AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);
double normal_cdf(double x);
double normal_survival(double x);
double normal_density(double x);

// Variates. Normals use the inverse CDF so a fixed stream maps to a fixed
// path of values regardless of the parameters applied afterwards.
double draw_normal(Philox4x32& gen);
double draw_exponential(Philox4x32& gen, double rate);
/// Gamma(shape, 1) via Marsaglia-Tsang.
double draw_gamma(Philox4x32& gen, double shape);
double draw_student_t(Philox4x32& gen, double dof);

/// Latent distribution selector.
class LatentKind {
 public:
  enum class Tag { standard_normal, exponential, student_t };

  static LatentKind standard_normal() { return LatentKind(Tag::standard_normal, 0.0); }
  static LatentKind exponential(double rate);
  static LatentKind student_t(double dof);

  Tag tag() const { return tag_; }
  /// Rate for exponential, degrees of freedom for Student t.
  double parameter() const { return parameter_; }

  double draw(Philox4x32& gen) const;

 private:
  LatentKind(Tag tag, double parameter) : tag_(tag), parameter_(parameter) {}
  Tag tag_;
  double parameter_;
};

std::vector<double> draw_iid(const LatentKind& kind, std::size_t count, SeedSpec seed);

struct NormalPair {
  std::vector<double> first;
  std::vector<double> second;
};

/// Base draws (Z'_a, Z'_b) kept so a pair can be re-correlated for any rho
/// without new randomness.
class CorrelatedNormalBase {
 public:
  CorrelatedNormalBase(std::size_t count, SeedSpec seed);

  std::size_t size() const { return independent_a_.size(); }
  std::span<const double> independent_a() const { return independent_a_; }
  std::span<const double> independent_b() const { return independent_b_; }

  /// Z_a = Z'_a, Z_b = rho Z'_a + sqrt(1 - rho^2) Z'_b.
  NormalPair correlate(double rho) const;

 private:
  std::vector<double> independent_a_;
  std::vector<double> independent_b_;
};

NormalPair draw_correlated_pair(double rho, std::size_t count, SeedSpec seed);

}  // namespace heavytail
