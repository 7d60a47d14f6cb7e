#pragma once

#include <cstddef>
#include <functional>

namespace tfs {

/// Worker count used by the transforms. Defaults to $TFS_THREADS, else the
/// hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Each index must write only its own outputs;
/// callers reduce afterwards in index order so results do not depend on the
/// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tfs
