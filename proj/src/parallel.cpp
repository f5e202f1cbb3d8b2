#include "latfact/parallel.hpp"

namespace latfact {

int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace latfact
