#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowlens/bitmatrix.hpp"
#include "flowlens/detail/rng.hpp"
#include "flowlens/errors.hpp"
#include "flowlens/features.hpp"

namespace flowlens {

struct KModesOptions {
    std::uint32_t max_iter = 100;
    /// Worker threads for the assignment step; 0 = hardware concurrency,
    /// 1 = serial. Results are identical for any thread count.
    unsigned threads = 1;
};

struct ClusterModel {
    std::uint32_t k = 0;
    BitMatrix modes;                       // k x column-arity
    std::vector<std::uint32_t> assignments; // per row, in [0, k)
    std::vector<std::uint64_t> sizes;       // per cluster, each >= 1
    std::uint64_t cost = 0;                 // sum of Hamming distances to assigned modes
    std::uint32_t iterations = 0;           // assignment passes executed
    std::uint64_t seed = 0;
    bool converged = false;
    std::vector<std::uint64_t> cost_trace;  // cost after each assignment pass
};

namespace detail {

inline std::vector<std::size_t> distinct_row_representatives(const BitMatrix& rows) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    std::vector<std::size_t> reps;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto row = rows.row(r);
        const std::uint64_t h = fnv1a(row.data(), row.size() * sizeof(std::uint64_t));
        auto& bucket = buckets[h];
        bool found = false;
        for (std::size_t other : bucket) {
            if (std::equal(row.begin(), row.end(), rows.row(other).begin())) {
                found = true;
                break;
            }
        }
        if (!found) {
            bucket.push_back(r);
            reps.push_back(r);
        }
    }
    return reps;
}

// Nearest mode per row (tie -> lowest cluster index), chunked over threads.
// Chunking cannot change the result; it only partitions independent work.
inline void assign_rows(const BitMatrix& rows, const BitMatrix& modes,
                        std::vector<std::uint32_t>& assignments, std::vector<std::uint64_t>& dists,
                        unsigned threads) {
    const std::size_t n = rows.rows();
    const std::uint32_t k = static_cast<std::uint32_t>(modes.rows());
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto row = rows.row(r);
            std::uint32_t best = 0;
            std::uint64_t best_d = hamming_words(row, modes.row(0));
            for (std::uint32_t m = 1; m < k; ++m) {
                const std::uint64_t d = hamming_words(row, modes.row(m));
                if (d < best_d) {
                    best_d = d;
                    best = m;
                }
            }
            assignments[r] = best;
            dists[r] = best_d;
        }
    };
    unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    if (t > 1 && n >= 2 * t) {
        std::vector<std::thread> pool;
        pool.reserve(t);
        const std::size_t chunk = (n + t - 1) / t;
        for (unsigned i = 0; i < t; ++i) {
            const std::size_t begin = i * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end)
                break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool)
            th.join();
    } else {
        worker(0, n);
    }
}

} // namespace detail

/// Lloyd-style k-modes over binary rows under Hamming distance.
///
/// Each pass assigns rows to the nearest mode (tie -> lowest cluster
/// index), repairs empty clusters by reseeding them with the row farthest
/// from its current mode, then recomputes modes as per-column majorities
/// (tie -> keep the previous bit, which keeps the cost trace
/// non-increasing). Initial modes are k distinct rows drawn without
/// replacement from the seed. Deterministic for fixed inputs, independent
/// of the thread count.
inline ClusterModel kmodes(const BitMatrix& rows, std::uint32_t k, std::uint64_t seed,
                           const KModesOptions& options = {}) {
    if (k < 1)
        throw AnalysisError("k must be >= 1");
    if (options.max_iter < 1)
        throw AnalysisError("max_iter must be >= 1");
    const std::size_t n = rows.rows();
    const std::vector<std::size_t> distinct = detail::distinct_row_representatives(rows);
    if (k > distinct.size())
        throw AnalysisError("k=" + std::to_string(k) + " exceeds the number of distinct rows (" +
                            std::to_string(distinct.size()) + ")");

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.modes = BitMatrix(k, rows.cols());

    detail::Rng rng(seed);
    const std::vector<std::size_t> picks = rng.sample_indices(distinct.size(), k);
    for (std::uint32_t m = 0; m < k; ++m)
        model.modes.assign_row(m, rows.row(distinct[picks[m]]));

    std::vector<std::uint32_t> prev_assignments;
    std::vector<std::uint64_t> dists(n, 0);
    model.assignments.assign(n, 0);
    model.sizes.assign(k, 0);

    std::vector<std::uint32_t> ones; // per-cluster-column one-counts for the update step

    for (std::uint32_t iter = 1; iter <= options.max_iter; ++iter) {
        model.iterations = iter;
        detail::assign_rows(rows, model.modes, model.assignments, dists, options.threads);

        std::fill(model.sizes.begin(), model.sizes.end(), 0);
        for (std::size_t r = 0; r < n; ++r)
            ++model.sizes[model.assignments[r]];

        // Empty-cluster repair. Under k <= distinct(rows) a row with
        // positive distance inside a cluster of size >= 2 always exists.
        for (std::uint32_t e = 0; e < k; ++e) {
            if (model.sizes[e] != 0)
                continue;
            std::size_t farthest = n;
            std::uint64_t far_d = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (model.sizes[model.assignments[r]] < 2)
                    continue;
                if (farthest == n || dists[r] > far_d) {
                    farthest = r;
                    far_d = dists[r];
                }
            }
            if (farthest == n)
                throw AnalysisError("internal error: cannot repair empty cluster");
            --model.sizes[model.assignments[farthest]];
            model.modes.assign_row(e, rows.row(farthest));
            model.assignments[farthest] = e;
            model.sizes[e] = 1;
            dists[farthest] = 0;
        }

        std::uint64_t cost = 0;
        for (std::size_t r = 0; r < n; ++r)
            cost += dists[r];
        model.cost = cost;
        model.cost_trace.push_back(cost);

        if (model.assignments == prev_assignments) {
            model.converged = true;
            break;
        }
        prev_assignments = model.assignments;
        if (iter == options.max_iter)
            break;

        // Majority update.
        const std::size_t cols = rows.cols();
        ones.assign(static_cast<std::size_t>(k) * cols, 0);
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint32_t m = model.assignments[r];
            const auto row = rows.row(r);
            std::uint32_t* cluster_ones = ones.data() + static_cast<std::size_t>(m) * cols;
            for (std::size_t w = 0; w < row.size(); ++w) {
                std::uint64_t word = row[w];
                while (word) {
                    const int bit = std::countr_zero(word);
                    ++cluster_ones[w * 64 + static_cast<std::size_t>(bit)];
                    word &= word - 1;
                }
            }
        }
        for (std::uint32_t m = 0; m < k; ++m) {
            const std::uint64_t size = model.sizes[m];
            const std::uint32_t* cluster_ones = ones.data() + static_cast<std::size_t>(m) * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                const std::uint64_t twice = 2ULL * cluster_ones[c];
                if (twice > size)
                    model.modes.set(m, c, true);
                else if (twice < size)
                    model.modes.set(m, c, false);
                // exact tie: keep the previous bit
            }
        }
    }
    return model;
}

struct ClusteringSuite {
    std::vector<std::uint32_t> requested_ks;
    std::vector<ClusterModel> models; // one per requested k, in order
    std::uint64_t matrix_fingerprint = 0;
};

/// One kmodes run per k; per-run seeds derive from (master_seed, k) so a
/// single master seed reproduces the whole suite. Runs execute
/// concurrently; the output order follows ks.
inline ClusteringSuite run_suite(const FeatureMatrix& matrix, const std::vector<std::uint32_t>& ks,
                                 std::uint64_t master_seed, const KModesOptions& options = {}) {
    if (ks.empty())
        throw ConfigError("at least one cluster count k is required");
    ClusteringSuite suite;
    suite.requested_ks = ks;
    suite.matrix_fingerprint = matrix.fingerprint();
    std::vector<std::future<ClusterModel>> futures;
    futures.reserve(ks.size());
    for (const std::uint32_t k : ks)
        futures.push_back(std::async(std::launch::async, [&, k] {
            return kmodes(matrix.bits, k, detail::derive_seed(master_seed, k), options);
        }));
    for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
            suite.models.push_back(futures[i].get());
        } catch (const AnalysisError& e) {
            throw AnalysisError("k=" + std::to_string(ks[i]) + ": " + e.what());
        }
    }
    return suite;
}

/// Suite export: per-model parameters and results, assignments keyed by
/// case id, modes keyed by column descriptors.
inline nlohmann::json suite_to_json(const ClusteringSuite& suite, const FeatureMatrix& matrix) {
    if (suite.matrix_fingerprint != matrix.fingerprint())
        throw AnalysisError("clustering suite does not belong to this feature matrix");
    nlohmann::json doc;
    char fp[19];
    std::snprintf(fp, sizeof(fp), "0x%016llx",
                  static_cast<unsigned long long>(suite.matrix_fingerprint));
    doc["matrix_fingerprint"] = fp;
    doc["requested_ks"] = suite.requested_ks;
    nlohmann::json models = nlohmann::json::array();
    for (const ClusterModel& model : suite.models) {
        nlohmann::json m;
        m["k"] = model.k;
        m["seed"] = model.seed;
        m["sizes"] = model.sizes;
        m["cost"] = model.cost;
        m["iterations"] = model.iterations;
        m["converged"] = model.converged;
        nlohmann::json assignments = nlohmann::json::object();
        for (std::size_t r = 0; r < model.assignments.size(); ++r)
            assignments[matrix.case_ids[r]] = model.assignments[r];
        m["assignments"] = std::move(assignments);
        nlohmann::json modes = nlohmann::json::array();
        for (std::uint32_t c = 0; c < model.k; ++c) {
            nlohmann::json mode = nlohmann::json::object();
            for (std::size_t col = 0; col < matrix.column_count(); ++col)
                mode[matrix.column_descriptor(col)] = model.modes.get(c, col) ? 1 : 0;
            modes.push_back(std::move(mode));
        }
        m["modes"] = std::move(modes);
        models.push_back(std::move(m));
    }
    doc["models"] = std::move(models);
    return doc;
}

} // namespace flowlens
