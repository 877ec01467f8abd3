#pragma once

namespace nbcall {

/// A computed quantity whose exact value lies within value +- error.
struct Certified {
  double value = 0.0;
  double error = 0.0;

  double lower() const noexcept { return value - error; }
  double upper() const noexcept { return value + error; }
  bool contains(double x, double slack = 0.0) const noexcept {
    return x >= lower() - slack && x <= upper() + slack;
  }
};

}  // namespace nbcall
