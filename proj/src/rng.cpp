#include "heavytail/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "heavytail/errors.hpp"

namespace heavytail {

std::uint64_t mix_seed(std::uint64_t value) {
  value += 0x9E3779B97F4A7C15ULL;
  value = (value ^ (value >> 30)) * 0xBF58476D1CE4E5B9ULL;
  value = (value ^ (value >> 27)) * 0x94D049BB133111EBULL;
  return value ^ (value >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(mix_seed(master) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

Philox4x32::Block Philox4x32::encrypt(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

Philox4x32::Philox4x32(SeedSpec spec)
    : key_{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32)},
      stream_(spec.stream_id) {}

void Philox4x32::refill() {
  const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  buffer_ = encrypt(ctr, key_);
  ++block_;
  used_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 2) refill();
  const auto hi = buffer_[2 * used_];
  const auto lo = buffer_[2 * used_ + 1];
  ++used_;
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

double Philox4x32::uniform() {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>((*this)() >> 11) + 0.5) * kScale;
}

void Philox4x32::discard(std::uint64_t count) {
  if (count == 0) return;
  const std::uint64_t remaining = static_cast<std::uint64_t>(2 - used_);
  if (count <= remaining) {
    used_ += static_cast<int>(count);
    return;
  }
  count -= remaining;
  block_ += (count - 1) / 2;
  refill();
  used_ = static_cast<int>((count - 1) % 2 + 1);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidParameter("normal_quantile: probability outside [0, 1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_survival(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_density(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double draw_normal(Philox4x32& gen) { return normal_quantile(gen.uniform()); }

double draw_exponential(Philox4x32& gen, double rate) { return -std::log(gen.uniform()) / rate; }

double draw_gamma(Philox4x32& gen, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InvalidParameter("gamma shape must be positive and finite");
  }
  if (shape < 1.0) {
    const double boost = std::pow(gen.uniform(), 1.0 / shape);
    return draw_gamma(gen, shape + 1.0) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = draw_normal(gen);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = gen.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double draw_student_t(Philox4x32& gen, double dof) {
  const double z = draw_normal(gen);
  const double chi2 = 2.0 * draw_gamma(gen, 0.5 * dof);
  return z / std::sqrt(chi2 / dof);
}

LatentKind LatentKind::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InvalidParameter("exponential rate must be positive, got " + std::to_string(rate));
  }
  return LatentKind(Tag::exponential, rate);
}

LatentKind LatentKind::student_t(double dof) {
  if (!(dof > 0.0) || !std::isfinite(dof)) {
    throw InvalidParameter("student_t degrees of freedom must be positive, got " +
                           std::to_string(dof));
  }
  return LatentKind(Tag::student_t, dof);
}

double LatentKind::draw(Philox4x32& gen) const {
  switch (tag_) {
    case Tag::standard_normal:
      return draw_normal(gen);
    case Tag::exponential:
      return draw_exponential(gen, parameter_);
    case Tag::student_t:
      return draw_student_t(gen, parameter_);
  }
  return 0.0;
}

std::vector<double> draw_iid(const LatentKind& kind, std::size_t count, SeedSpec seed) {
  if (count == 0) throw InvalidParameter("draw_iid: count must be at least 1");
  Philox4x32 gen(seed);
  std::vector<double> out(count);
  for (auto& value : out) value = kind.draw(gen);
  return out;
}

CorrelatedNormalBase::CorrelatedNormalBase(std::size_t count, SeedSpec seed)
    : independent_a_(count), independent_b_(count) {
  if (count == 0) throw InvalidParameter("correlated draws: count must be at least 1");
  Philox4x32 gen(seed);
  for (std::size_t k = 0; k < count; ++k) {
    independent_a_[k] = draw_normal(gen);
    independent_b_[k] = draw_normal(gen);
  }
}

NormalPair CorrelatedNormalBase::correlate(double rho) const {
  if (!(std::fabs(rho) <= 1.0)) {
    throw InvalidParameter("correlation must lie in [-1, 1], got " + std::to_string(rho));
  }
  const double complement = std::sqrt(1.0 - rho * rho);
  NormalPair out{independent_a_, std::vector<double>(size())};
  for (std::size_t k = 0; k < size(); ++k) {
    out.second[k] = rho * independent_a_[k] + complement * independent_b_[k];
  }
  return out;
}

NormalPair draw_correlated_pair(double rho, std::size_t count, SeedSpec seed) {
  if (!(std::fabs(rho) <= 1.0)) {
    throw InvalidParameter("correlation must lie in [-1, 1], got " + std::to_string(rho));
  }
  return CorrelatedNormalBase(count, seed).correlate(rho);
}

}  // namespace heavytail
