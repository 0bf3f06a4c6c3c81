#pragma once

#include <cstddef>
#include <functional>

namespace afem {

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// hardware default.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, so any
/// body that writes only to slot i produces results independent of the thread
/// count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace afem
