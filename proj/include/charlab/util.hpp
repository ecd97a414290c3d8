#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace charlab {

// Ordered parallel map over independent work items: results land at their
// input index, so output order never depends on scheduling.
template <typename In, typename Out>
std::vector<Out> parallel_map(const std::vector<In>& items,
                              const std::function<Out(const In&)>& fn,
                              unsigned jobs = 0) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Out> out(items.size());
  if (jobs == 1 || items.size() <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = fn(items[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      out[i] = fn(items[i]);
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 0; t + 1 < jobs && t + 1 < items.size(); ++t)
    threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return out;
}

}  // namespace charlab
