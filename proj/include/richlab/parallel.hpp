// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_PARALLEL_HPP
#define RICHLAB_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace richlab
{

// Runs fn(i) for i in [0, count) on up to `threads` workers with a static round-robin
// partition. The first exception (by worker) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn &&fn)
{
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < count; i++)
    {
      fn(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; w++)
  {
    pool.emplace_back([&, w] {
      try
      {
        for (std::size_t i = w; i < count; i += workers)
        {
          fn(i);
        }
      }
      catch (...)
      {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  for (auto &e : errors)
  {
    if (e)
    {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace richlab

#endif  // RICHLAB_PARALLEL_HPP
