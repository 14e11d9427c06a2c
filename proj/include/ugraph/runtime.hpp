#pragma once

#if defined(__GLIBC__) || __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace ugraph {

/// The samplers allocate and free many mid-sized Eigen temporaries; glibc would
/// hand each one back to the kernel via munmap. Keep them in the heap instead.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace ugraph
