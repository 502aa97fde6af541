#pragma once

#include <span>
#include <vector>

namespace skno {

struct LossResult {
  double loss = 0.0;                 // mean over samples of ||pred - u|| / ||u||
  std::vector<double> per_sample;
  std::vector<double> grad;          // d loss / d pred, same layout as pred
};

/// `pred` and `target` hold `batch` equal-sized samples back to back.
LossResult rel_l2_loss(std::span<const double> pred, std::span<const double> target, int batch,
                       bool with_grad = true);

}  // namespace skno
