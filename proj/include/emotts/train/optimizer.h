#ifndef EMOTTS_TRAIN_OPTIMIZER_H_
#define EMOTTS_TRAIN_OPTIMIZER_H_

#include <vector>

#include "emotts/model/tape.h"

namespace emotts::train {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-6;
  double clip_norm = 1.0;  // global L2 norm; <= 0 disables clipping
};

double GlobalNorm(const std::vector<model::Matrix>& grads);

// Scales grads in place so their global norm is at most max_norm.
// Returns the norm before clipping.
double ClipByGlobalNorm(std::vector<model::Matrix>& grads, double max_norm);

class Adam {
 public:
  Adam(const model::ParamSet& params, AdamConfig cfg);

  // Entries with `mask[i] == false` are left untouched, moments included.
  void Step(model::ParamSet& params, std::vector<model::Matrix>& grads,
            const std::vector<bool>& mask);

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<model::Matrix> m_;
  std::vector<model::Matrix> v_;
  long t_ = 0;
};

}  // namespace emotts::train

#endif  // EMOTTS_TRAIN_OPTIMIZER_H_
