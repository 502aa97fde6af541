#include "skno/loss.hpp"

#include <cmath>

#include "skno/error.hpp"

namespace skno {

LossResult rel_l2_loss(std::span<const double> pred, std::span<const double> target, int batch, bool with_grad) {
  if (pred.size() != target.size()) throw UsageError("prediction and target shapes differ");
  if (batch < 1 || target.size() % static_cast<std::size_t>(batch) != 0)
    throw UsageError("batch size does not divide the sample data");
  const std::size_t n = target.size() / batch;
  LossResult r;
  r.per_sample.resize(batch);
  if (with_grad) r.grad.assign(pred.size(), 0.0);
  for (int b = 0; b < batch; ++b) {
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
      const double e = pred[i] - target[i];
      diff2 += e * e;
      norm2 += target[i] * target[i];
    }
    if (norm2 == 0.0) throw UsageError("target sample " + std::to_string(b) + " has zero norm");
    const double diff = std::sqrt(diff2), norm = std::sqrt(norm2);
    r.per_sample[b] = diff / norm;
    r.loss += r.per_sample[b] / batch;
    if (with_grad && diff > 0.0) {
      const double scale = 1.0 / (diff * norm * batch);
      for (std::size_t i = b * n; i < (b + 1) * n; ++i) r.grad[i] = (pred[i] - target[i]) * scale;
    }
  }
  return r;
}

}  // namespace skno
