#include "spanemo/adam.hpp"

#include <cmath>

namespace spanemo {

void Adam::add_group(ParamList params, double lr) {
  Group g{lr, {}};
  for (Param* p : params)
    g.slots.push_back({p, Matrix::Zero(p->value.rows(), p->value.cols()), Matrix::Zero(p->value.rows(), p->value.cols())});
  groups_.push_back(std::move(g));
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (auto& g : groups_) {
    if (g.lr == 0.0) continue;
    const double step_size = g.lr / bc1;
    for (auto& s : g.slots) {
      s.m = options_.beta1 * s.m + (1.0 - options_.beta1) * s.param->grad;
      s.v = options_.beta2 * s.v + (1.0 - options_.beta2) * s.param->grad.cwiseAbs2();
      s.param->value.array() -= step_size * s.m.array() / ((s.v.array() / bc2).sqrt() + options_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& g : groups_)
    for (auto& s : g.slots) s.param->zero_grad();
}

}  // namespace spanemo
