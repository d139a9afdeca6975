// Copyright 2026 The vqdr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vqdr {

/// Worker count used when a caller passes 0.
inline unsigned default_workers() {
    return std::max(1U, std::thread::hardware_concurrency());
}

/**
 * @brief Run body(i) for i in [0, count) on up to `workers` threads.
 *
 * Results must be written to slot i by the body; scheduling order never
 * influences output. The first exception thrown by any body is rethrown.
 */
template <class Body>
void parallel_for(std::size_t count, Body &&body, unsigned workers = 0) {
    const unsigned w = workers == 0 ? default_workers() : workers;
    const auto nthreads = static_cast<std::size_t>(std::min<std::size_t>(w, count));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace vqdr
