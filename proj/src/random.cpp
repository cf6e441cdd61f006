#include "locogan/random.hpp"

#include <sstream>

#include "locogan/errors.hpp"

namespace locogan {

std::string Rng::state() const {
  std::ostringstream os;
  os.precision(17);
  os << engine_ << ' ' << normal_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_ >> normal_;
  if (!is) throw CheckpointError("malformed random stream state");
}

}  // namespace locogan
