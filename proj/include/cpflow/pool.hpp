#ifndef CPFLOW_POOL_HPP
#define CPFLOW_POOL_HPP

#include <cstddef>
#include <functional>

namespace cpflow {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index writes only
// its own output slot, so results are byte-identical for any worker count;
// any reduction over slots must happen afterwards in index order.
// workers == 0 means hardware concurrency; exceptions propagate to the caller.
void parallel_for_indexed(std::size_t n, unsigned workers,
                          const std::function<void(std::size_t)>& fn);

}  // namespace cpflow

#endif
