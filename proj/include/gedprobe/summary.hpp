#pragma once

#include <span>

namespace gedprobe {

enum class StdMode { Sample, Population };

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

// Sample mode divides by n-1; a single value has std 0 in either mode.
MeanStd mean_std(std::span<const double> values, StdMode mode = StdMode::Sample);

}  // namespace gedprobe
