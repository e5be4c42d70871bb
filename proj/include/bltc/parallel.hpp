#pragma once

#include <cstddef>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace bltc {

/// Runs f(i) for i in [0, n) on a work-stealing pool capped at `threads`
/// workers (0 = library default). One index per task.
template <class F>
void parallel_for_each_index(std::size_t n, int threads, F&& f) {
    if (n == 0)
        return;
    auto body = [&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, 1),
                          [&](const tbb::blocked_range<std::size_t>& r) {
                              for (std::size_t i = r.begin(); i != r.end(); ++i)
                                  f(i);
                          },
                          tbb::simple_partitioner{});
    };
    if (threads > 0) {
        tbb::task_arena arena(threads);
        arena.execute(body);
    } else {
        body();
    }
}

} // namespace bltc
