#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rare::parallel {

/// Apply fn to every item on up to `workers` threads; results keep input
/// order. The first exception wins and is rethrown after all threads join.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, size_t workers)
    -> std::vector<decltype(fn(items[0]))> {
    using Out = decltype(fn(items[0]));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;

    workers = std::max<size_t>(1, std::min(workers, items.size()));
    if (workers == 1) {
        for (size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                results[i] = fn(items[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace rare::parallel
