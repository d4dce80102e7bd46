#pragma once

#include <cstddef>
#include <functional>

namespace stochmech {

/// Worker count: explicit value if nonzero, else STOCHMECH_THREADS, else the
/// hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

/// Runs task(i) for i in [0, n) on up to `threads` workers. Tasks must write
/// disjoint outputs; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace stochmech
