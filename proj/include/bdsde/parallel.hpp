#pragma once

#include <cstddef>
#include <functional>

namespace bdsde {

// Worker count used by parallel_for. Defaults to 1; results never depend on it
// because every index writes its own output slot.
void set_thread_count(unsigned n);
unsigned thread_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace bdsde
