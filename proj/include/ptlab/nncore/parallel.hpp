#pragma once

#include <cstddef>
#include <functional>

namespace ptlab::nncore {

/// Runs task(i) for i in [0, count) on up to `threads` worker threads.
/// Tasks must be independent; results must not depend on which thread runs
/// which index. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

}  // namespace ptlab::nncore
