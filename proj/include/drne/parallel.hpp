#pragma once

#include <functional>

namespace drne {

/// Runs body(0..count-1) on a small worker pool. Each index must write only
/// to its own output slot, which keeps merged results order-independent.
/// threads <= 0 uses the hardware concurrency.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace drne
