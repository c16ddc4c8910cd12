#include "gedprobe/summary.hpp"

#include <cmath>

namespace gedprobe {

MeanStd mean_std(std::span<const double> values, StdMode mode) {
  MeanStd out;
  if (values.empty()) {
    return out;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  const auto n = static_cast<double>(values.size());
  out.mean = sum / n;
  if (values.size() < 2) {
    return out;
  }
  double sq = 0.0;
  for (double v : values) {
    sq += (v - out.mean) * (v - out.mean);
  }
  out.std = std::sqrt(sq / (mode == StdMode::Sample ? n - 1.0 : n));
  return out;
}

}  // namespace gedprobe
