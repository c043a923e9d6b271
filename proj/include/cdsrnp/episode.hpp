#pragma once

#include <cstdint>
#include <vector>

#include "cdsrnp/data.hpp"

namespace cdsrnp::episodes {

/// One scored data point: padded sequence pair, candidate item in the
/// shared index space, and its 0/1 label.
struct Sample {
  std::vector<std::size_t> x_a, x_b;  // length T, local indices, left-padded
  std::size_t candidate = 0;          // shared-vocabulary index, never pad
  data::Domain candidate_domain = data::Domain::A;
  double label = 0.0;
  std::size_t user_index = 0;  // provenance, not part of the model input
};

/// One meta-learning unit: a support set of positives from overlapped
/// users plus a query set.
struct Episode {
  std::vector<Sample> support;
  std::vector<Sample> query;
};

struct EpisodeOptions {
  std::size_t n_support = 10;
  std::size_t n_query = 20;  // even: half positives, half negatives
  std::size_t seq_len = 15;
  bool all_user_support = false;  // ablation: allow non-overlapped support users
};

/// Users eligible to appear in support sets: train-split users with at
/// least one visible item, restricted to overlapped users unless
/// all_users is set.
std::vector<std::size_t> support_pool(const data::DatasetSplit& split, bool all_users);

/// Fresh training episode: n_support next-item positives from distinct
/// support-pool users, n_query/2 positive train targets (distinct users
/// preferred) each paired with one sampled negative for the same user and
/// domain. Deterministic per seed.
Episode build_training_episode(const data::DatasetSplit& split, const EpisodeOptions& options,
                               std::uint64_t seed);

/// Evaluation episode for one held-out target: a support set fixed per
/// seed (shared by every target evaluated under that seed) and a query of
/// the single positive plus n_negatives sampled negatives. Query labels
/// exist only for metric computation.
Episode build_eval_episode(const data::DatasetSplit& split, data::Split which,
                           const data::TargetEntry& target, std::size_t n_support,
                           std::size_t n_negatives, std::size_t seq_len, bool all_user_support,
                           std::uint64_t seed);

}  // namespace cdsrnp::episodes
