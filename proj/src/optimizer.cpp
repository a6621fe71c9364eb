#include "roic/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace roic {

AdamW::AdamW(const Config& config, const std::vector<TensorView>& params)
    : config_(config) {
  if (config.total_steps < 1) {
    throw std::invalid_argument("AdamW: total_steps must be positive");
  }
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const TensorView& p : params) {
    m_.push_back(Vector::Zero(p.size()));
    v_.push_back(Vector::Zero(p.size()));
  }
}

double AdamW::current_lr() const {
  return config_.lr0 *
         (1.0 - static_cast<double>(step_) /
                    static_cast<double>(config_.total_steps));
}

void AdamW::step(const std::vector<TensorView>& params,
                 const std::vector<ConstTensorView>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("AdamW: tensor layout mismatch");
  }
  const double lr = current_lr();
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != m_[i].size() || grads[i].size() != m_[i].size()) {
      throw std::invalid_argument("AdamW: tensor shape mismatch");
    }
    auto p = params[i].flat();
    auto g = grads[i].flat();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] +
            (1.0 - config_.beta2) * g.cwiseProduct(g);
    const auto m_hat = m_[i] / bc1;
    const auto v_hat = v_[i] / bc2;
    p -= lr * (m_hat.array() / (v_hat.array().sqrt() + config_.eps) +
               config_.weight_decay * p.array())
                  .matrix();
  }
}

void AdamW::restore(std::vector<Vector> m, std::vector<Vector> v, long step) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw std::invalid_argument("AdamW: restore layout mismatch");
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size()) {
      throw std::invalid_argument("AdamW: restore shape mismatch");
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  step_ = step;
}

}  // namespace roic
