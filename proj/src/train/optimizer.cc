#include "emotts/train/optimizer.h"

#include <cmath>

namespace emotts::train {

double GlobalNorm(const std::vector<model::Matrix>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double ClipByGlobalNorm(std::vector<model::Matrix>& grads, double max_norm) {
  const double norm = GlobalNorm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

Adam::Adam(const model::ParamSet& params, AdamConfig cfg)
    : cfg_(cfg), m_(params.ZerosLike()), v_(params.ZerosLike()) {}

void Adam::Step(model::ParamSet& params, std::vector<model::Matrix>& grads,
                const std::vector<bool>& mask) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    if (!mask[i]) continue;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseAbs2();
    params.value(i).array() -=
        cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
  }
}

}  // namespace emotts::train
