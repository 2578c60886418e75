#ifndef SENSR_OPTIM_HPP
#define SENSR_OPTIM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sensr {

// Adaptive-moment (Adam) update with standard bias correction. One instance
// per optimized variable block; `descend` for minimization, `ascend` for the
// inner maximization of the attack.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void reset() {
    t_ = 0;
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
  }

  void descend(std::span<double> x, std::span<const double> g) { update(x, g, -1.0); }
  void ascend(std::span<double> x, std::span<const double> g) { update(x, g, +1.0); }

 private:
  void update(std::span<double> x, std::span<const double> g, double sign) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g[i] * g[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      x[i] += sign * lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace sensr

#endif
