// SPDX-License-Identifier: Apache-2.0
//
// cranec: delay-QoS-aware power allocation for multi-point downlinks
// Copyright (C) 2026 The cranec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Deterministic fan-out over a fixed number of chunks. The chunk layout
// never depends on the thread count, so reductions done in chunk order
// give identical results whether one thread or many run them.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cranec::parallel
{

/// Worker count: CRANEC_THREADS if set and positive, else hardware concurrency.
inline unsigned thread_count()
{
    if (const char *env = std::getenv("CRANEC_THREADS"))
    {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(chunk) for chunk in [0, n_chunks), possibly concurrently.
/// The first exception thrown by any chunk is rethrown.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, Fn &&fn)
{
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n_chunks));
    if (workers <= 1)
    {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t c; (c = next.fetch_add(1)) < n_chunks;)
            {
                try
                {
                    fn(c);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace cranec::parallel
