#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <system_error>

namespace birkhoff {

// Levy's constant pi^2 / (12 log 2): almost-sure growth rate of log q_n.
inline constexpr double kLevy = std::numbers::pi * std::numbers::pi / (12.0 * std::numbers::ln2);
// Gauss-measure mean of log|G'|, i.e. twice Levy's constant.
inline constexpr double kTwoLevy = 2.0 * kLevy;
// Lyapunov exponent of the golden-mean fixed point, the left end of the spectrum.
inline constexpr double kSpectrumLeftEnd = 0.962423650119206894995517826849;  // 2 log((sqrt 5 + 1)/2)

// Compensated (Neumaier) running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Fixed-order pairwise summation. The association order depends only on the
// length of the input, so results do not depend on how the values were produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace birkhoff
