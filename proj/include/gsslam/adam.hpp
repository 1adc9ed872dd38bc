#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gsslam {

// Plain Adam over a flat parameter vector with per-coordinate learning
// rates. Copyable, so callers can snapshot state for step rollback.
class Adam {
 public:
  explicit Adam(size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  size_t size() const { return m_.size(); }

  // Computes the update step for the given gradient; the caller applies it.
  // step[i] = -lr[i] * m_hat / (sqrt(v_hat) + eps)
  void compute_step(std::span<const double> grad, std::span<const double> lr,
                    std::span<double> step) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < m_.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      step[i] = -lr[i] * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  // In-place variant for parameters stored in a flat array.
  void step_params(std::span<double> params, std::span<const double> grad,
                   std::span<const double> lr) {
    std::vector<double> delta(params.size());
    compute_step(grad, lr, delta);
    for (size_t i = 0; i < params.size(); ++i) params[i] += delta[i];
  }

  // Keeps optimizer state aligned with a compacted parameter set.
  void compact(const std::vector<size_t>& keep) {
    std::vector<double> m2(keep.size()), v2(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) {
      m2[i] = m_[keep[i]];
      v2[i] = v_[keep[i]];
    }
    m_ = std::move(m2);
    v_ = std::move(v2);
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
  double beta1_, beta2_, eps_;
};

}  // namespace gsslam
