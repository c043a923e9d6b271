#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdsrnp/data.hpp"
#include "cdsrnp/model.hpp"

namespace cdsrnp::eval {

/// Outcome of ranking one positive against its sampled negatives.
struct RankResult {
  std::string user;
  data::Domain domain;
  std::size_t rank;        // 1-based
  std::size_t candidates;  // positive + negatives
};

/// 1-based rank of the positive under descending scores. Ties resolve
/// pessimistically: equal-scored negatives rank ahead of the positive.
std::size_t rank_positive(std::span<const double> scores, std::size_t positive_index);

/// Single-relevant-item NDCG: 1 / log2(rank + 1) inside the cutoff, else 0.
double ndcg_at_k(std::size_t rank, std::size_t k = 10);

double hr_at_k(std::size_t rank, std::size_t k = 10);

struct MetricStat {
  double mean = 0.0;
  double variance = 0.0;  // population variance over seeds
  double stddev = 0.0;
};

struct MetricsReport {
  MetricStat ndcg_a, hr_a, ndcg_b, hr_b;
  std::vector<std::uint64_t> seeds;
  std::size_t users_a = 0, users_b = 0;
  // per seed: {ndcg_a, hr_a, ndcg_b, hr_b}
  std::vector<std::array<double, 4>> per_seed;

  /// NDCG@10 mean averaged over the domains that have users.
  double mean_ndcg() const;
  double mean_hr() const;

  /// Flat key-value records, one per (domain, metric) pair.
  std::string serialize() const;
  void save_file(const std::string& path) const;
};

struct EvalOptions {
  std::size_t n_negatives = 999;
  std::size_t n_support = 10;
  std::size_t max_users = 0;  // 0 = all; otherwise a seeded subsample
  bool all_user_support = false;
};

/// Rank every held-out target of the chosen split under the 1-positive /
/// n-negative protocol, once per seed with per-seed support context and
/// negatives, and aggregate means/variances across seeds. Results do not
/// depend on user processing order, and parameters are never mutated, so
/// concurrent calls over the same model are safe.
MetricsReport evaluate(const model::Model& model, const data::DatasetSplit& split,
                       data::Split which, const EvalOptions& options,
                       std::span<const std::uint64_t> seeds);

/// Uniform-random scores pushed through the identical ranking path; the
/// calibration floor for every learned model.
MetricsReport random_baseline(const data::DatasetSplit& split, data::Split which,
                              std::size_t n_negatives, std::uint64_t seed);

}  // namespace cdsrnp::eval
