#pragma once

namespace scaleop {

/// Raise the allocator's mmap/trim thresholds so the MB-scale tensors that
/// training churns through are recycled from the heap instead of being
/// mapped and kernel-zeroed on every allocation (roughly a 2.5x step-time
/// difference). Idempotent; no-op on non-glibc platforms.
void tune_allocator();

}  // namespace scaleop
