#include "sde/coefficient_model.hpp"

#include <cmath>

#include "sde/errors.hpp"

namespace sde {

void CoefficientModel::validate() const {
  if (!(delay > 0.0) || !std::isfinite(delay)) throw ArgumentError("model: delay must be positive and finite");
  if (dimension == 0) throw ArgumentError("model: dimension must be positive");
  if (!drift) throw ArgumentError("model: drift is required");
  if (initial.empty()) throw ArgumentError("model: initial segment is required");
  if (initial.dimension() != dimension) throw ArgumentError("model: initial segment has wrong dimension");
  if (initial.start() != -delay || initial.end() != 0.0)
    throw ArgumentError("model: initial segment must be defined exactly on [-delay, 0]");
  const double sup = initial.window_sup(-delay, 0.0);
  if (!std::isfinite(sup * sup)) throw ArgumentError("model: initial segment has infinite sup norm");
}

}  // namespace sde
