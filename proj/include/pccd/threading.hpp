#ifndef PCCD_THREADING_HPP
#define PCCD_THREADING_HPP

#include <cstddef>
#include <functional>

namespace pccd {

/// Worker count: min(hardware threads, PC_CHANGE_THREADS if set). At least 1.
int worker_count();

/// Runs fn(i) for i in [0, n). Work items must write only to their own
/// output slots; results are then independent of the thread count, so a
/// parallel run is bit-identical to a single-threaded one.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pccd

#endif  // PCCD_THREADING_HPP
