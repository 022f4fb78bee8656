#include "basisforge/error.hpp"

namespace basisforge {

std::string NumericError::format(const std::string& what, long iteration) {
  if (iteration < 0) return what;
  return what + " (iteration " + std::to_string(iteration) + ")";
}

void throw_shape(const std::string& context, long er, long ec, long gr, long gc) {
  throw ShapeError(context + ": expected " + std::to_string(er) + "x" + std::to_string(ec) +
                   ", got " + std::to_string(gr) + "x" + std::to_string(gc));
}

}  // namespace basisforge
