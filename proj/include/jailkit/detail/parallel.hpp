#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include "jailkit/core.hpp"

namespace jailkit::detail {

// Calls fn(i) for i in [0, n), on an OpenMP team or serially. Exceptions
// cannot cross the parallel region, so the one from the lowest index is kept
// and rethrown afterwards, matching what the serial loop would report.
template <typename F>
void for_each_index(std::size_t n, Execution exec, F&& fn) {
    if (exec == Execution::serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::size_t error_index = n;
    std::mutex mu;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mu);
            if (static_cast<std::size_t>(i) < error_index) {
                error_index = static_cast<std::size_t>(i);
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace jailkit::detail
