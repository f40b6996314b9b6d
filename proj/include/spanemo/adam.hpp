#pragma once

#include <vector>

#include "spanemo/tensor.hpp"

namespace spanemo {

/// Adam with per-group learning rates, no weight decay, no schedule.
class Adam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options options) : options_(options) {}

  void add_group(ParamList params, double lr);
  void step();
  void zero_grad();
  long steps() const { return step_; }

 private:
  struct Slot {
    Param* param;
    Matrix m, v;
  };
  struct Group {
    double lr;
    std::vector<Slot> slots;
  };
  Options options_;
  std::vector<Group> groups_;
  long step_ = 0;
};

}  // namespace spanemo
