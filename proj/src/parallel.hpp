#pragma once

#include <exception>

namespace modfun::detail {

// OpenMP loop over [0, count) that carries the first exception out of the parallel region
// instead of terminating.
template <class Body>
void parallel_for(int count, Body&& body) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < count; ++j) {
        try {
            body(j);
        } catch (...) {
#pragma omp critical(modfun_parallel_for)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace modfun::detail
