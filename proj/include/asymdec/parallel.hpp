#pragma once

#include <cstddef>
#include <functional>

namespace asymdec {

// Runs task(i) for every i in [0, count) on up to `jobs` threads. Tasks
// claim indices from a shared counter, so each index runs exactly once;
// callers store results by index to keep output independent of the
// schedule. The first exception thrown by a task is rethrown after all
// threads join.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

}  // namespace asymdec
