#pragma once

#include "capaf/grid.hpp"
#include "capaf/tolerance.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace capaf {

/// Everything a batch command needs. Validated before any computation and
/// copied verbatim into the report it produces.
struct RunConfig {
    std::string command;
    double theta = std::numeric_limits<double>::quiet_NaN();
    int n_rho = 64;
    int n_phi = 64;
    int radial_order = kDefaultRadialOrder;
    std::uint64_t seed = 1;
    int trials = 20;
    int equality_trials = 5;
    int count = 3;
    double amplitude = 0.6;
    double base_radius = 1.0;
    double radius = 0.0;            ///< quermass: reference radius of a scaled cap, 0 for none
    std::string f2 = "ell";         ///< spectrum: "ell" or "random"
    std::string method = "auto";    ///< spectrum solver
    std::vector<int> sweep;         ///< spectrum: grid sizes for a refinement sweep
    std::vector<double> t_samples;  ///< steiner: empty means default_steiner_samples()
    std::vector<std::string> inputs;
    std::string tolerance_profile = "default";
};

nlohmann::json to_json(const RunConfig& c);

/// Throws Error{Parse} (or InvalidAngle / GridTooCoarse / Io) on an unusable config.
void validate(const RunConfig& c);

struct Artifact {
    std::string file;
    std::string contents;
};

struct RunResult {
    std::string name;
    nlohmann::json report;
    std::string csv;
    std::vector<Artifact> artifacts;
    bool passed = false;
};

/// Dispatches on c.command: gen, quermass, af, chain, spectrum, steiner,
/// reconstruct, report. Deterministic for a fixed config; the worker count
/// never changes the result.
RunResult run(const RunConfig& c);

/// Threshold for a quantity converging at `order`, anchored at 128 rings.
double grid_scaled(double at_128, int n_rho, int order);

/// Seed of stream `stream` within trial `trial` (splitmix64 mixing).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream);

/// Worker count: CAPAF_THREADS when set to a positive integer, otherwise the
/// hardware concurrency, never more than `jobs`.
int worker_count(int jobs);

/// out[i] = fn(i) for i in [0, n), evaluated on worker_count(n) threads.
/// Results land in index order; the first exception is rethrown.
template <class T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& fn)
{
    std::vector<std::optional<T>> slots(static_cast<std::size_t>(std::max(n, 0)));
    const int workers = worker_count(n);
    std::mutex lock;
    int next = 0;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            int i = 0;
            {
                const std::lock_guard<std::mutex> g(lock);
                if (next >= n || failure) {
                    return;
                }
                i = next++;
            }
            try {
                slots[static_cast<std::size_t>(i)].emplace(fn(i));
            } catch (...) {
                const std::lock_guard<std::mutex> g(lock);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    std::vector<T> out;
    out.reserve(slots.size());
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

} // namespace capaf
