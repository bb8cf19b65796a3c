#include "agcoop/types.hpp"

#include <string>
#include <utility>

namespace agcoop {

BoundsError::BoundsError(char axis, double value, double lo, double hi)
    : Error(std::string("position out of bounds on ") + axis + "-axis: " + std::to_string(value) +
            " not in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
      axis_(axis) {}

ValidationError::ValidationError(std::string field, const std::string& why)
    : Error("invalid field '" + field + "': " + why), field_(std::move(field)) {}

}  // namespace agcoop
