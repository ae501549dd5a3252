#pragma once

#include <cstddef>
#include <functional>

namespace leafheat {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls f(i) for i in [0, n); each index writes only its own outputs, so
/// results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace leafheat
