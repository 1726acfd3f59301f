#pragma once

#include <chrono>
#include <map>
#include <string>
#include <type_traits>
#include <utility>

namespace relx {

using Timings = std::map<std::string, double>;

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// Runs `op`, returns (result, milliseconds) and accumulates the duration
// under `label` when `timings` is given.
template <typename Op>
auto time_run(const std::string& label, Op&& op, Timings* timings = nullptr) {
  auto start = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<std::invoke_result_t<Op>>) {
    std::forward<Op>(op)();
    double ms = elapsed_ms(start);
    if (timings) (*timings)[label] += ms;
    return ms;
  } else {
    auto result = std::forward<Op>(op)();
    double ms = elapsed_ms(start);
    if (timings) (*timings)[label] += ms;
    return std::make_pair(std::move(result), ms);
  }
}

}  // namespace relx
