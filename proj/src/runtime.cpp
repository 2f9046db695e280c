#include "scaleop/runtime.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace scaleop {

void tune_allocator() {
#ifdef __GLIBC__
  static bool done = false;
  if (done) return;
  done = true;
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
}

}  // namespace scaleop
