#include "cdsrnp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cdsrnp/episode.hpp"
#include "cdsrnp/rng.hpp"

namespace cdsrnp::eval {

using data::DatasetSplit;
using data::Domain;
using data::Split;
using data::TargetEntry;

std::size_t rank_positive(std::span<const double> scores, std::size_t positive_index) {
  if (positive_index >= scores.size()) {
    throw std::out_of_range("positive index " + std::to_string(positive_index) +
                            " outside score vector of length " + std::to_string(scores.size()));
  }
  const double positive = scores[positive_index];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != positive_index && scores[i] >= positive) ++rank;
  }
  return rank;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw std::invalid_argument("rank is 1-based");
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double hr_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw std::invalid_argument("rank is 1-based");
  return rank <= k ? 1.0 : 0.0;
}

double MetricsReport::mean_ndcg() const {
  double sum = 0.0;
  std::size_t n = 0;
  if (users_a > 0) { sum += ndcg_a.mean; ++n; }
  if (users_b > 0) { sum += ndcg_b.mean; ++n; }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double MetricsReport::mean_hr() const {
  double sum = 0.0;
  std::size_t n = 0;
  if (users_a > 0) { sum += hr_a.mean; ++n; }
  if (users_b > 0) { sum += hr_b.mean; ++n; }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string MetricsReport::serialize() const {
  std::ostringstream out;
  out.precision(17);
  auto record = [&](char domain, const char* metric, const MetricStat& s, std::size_t users) {
    out << "domain=" << domain << "\tmetric=" << metric << "\tmean=" << s.mean
        << "\tvariance=" << s.variance << "\tstddev=" << s.stddev
        << "\tn_seeds=" << seeds.size() << "\tn_users=" << users << "\n";
  };
  record('A', "ndcg10", ndcg_a, users_a);
  record('A', "hr10", hr_a, users_a);
  record('B', "ndcg10", ndcg_b, users_b);
  record('B', "hr10", hr_b, users_b);
  return out.str();
}

void MetricsReport::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics report '" + path + "'");
  out << serialize();
}

namespace {

std::vector<TargetEntry> chosen_entries(const DatasetSplit& split, Split which,
                                        std::size_t max_users, std::uint64_t subsample_seed) {
  std::vector<TargetEntry> entries = split.entries(which);
  if (max_users > 0 && entries.size() > max_users) {
    rng::Rng r(rng::mix(subsample_seed, "user_subsample"));
    r.shuffle(entries);
    entries.resize(max_users);
    std::sort(entries.begin(), entries.end(), [](const TargetEntry& x, const TargetEntry& y) {
      return std::tie(x.user_index, x.domain) < std::tie(y.user_index, y.domain);
    });
  }
  return entries;
}

struct SeedStats {
  double ndcg_a = 0, hr_a = 0, ndcg_b = 0, hr_b = 0;
};

// Deterministic reduction: results are sorted by (user, domain) so the
// outcome cannot depend on evaluation order.
SeedStats reduce(std::vector<RankResult>& results, std::size_t& users_a, std::size_t& users_b) {
  std::sort(results.begin(), results.end(), [](const RankResult& x, const RankResult& y) {
    return std::tie(x.user, x.domain) < std::tie(y.user, y.domain);
  });
  SeedStats s;
  std::size_t na = 0, nb = 0;
  for (const auto& rr : results) {
    const double n = ndcg_at_k(rr.rank);
    const double h = hr_at_k(rr.rank);
    if (rr.domain == Domain::A) {
      s.ndcg_a += n;
      s.hr_a += h;
      ++na;
    } else {
      s.ndcg_b += n;
      s.hr_b += h;
      ++nb;
    }
  }
  if (na > 0) {
    s.ndcg_a /= static_cast<double>(na);
    s.hr_a /= static_cast<double>(na);
  }
  if (nb > 0) {
    s.ndcg_b /= static_cast<double>(nb);
    s.hr_b /= static_cast<double>(nb);
  }
  users_a = na;
  users_b = nb;
  return s;
}

MetricsReport aggregate_seeds(const std::vector<SeedStats>& stats,
                              std::span<const std::uint64_t> seeds, std::size_t users_a,
                              std::size_t users_b) {
  MetricsReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.users_a = users_a;
  report.users_b = users_b;
  for (const auto& s : stats) report.per_seed.push_back({s.ndcg_a, s.hr_a, s.ndcg_b, s.hr_b});
  auto fill = [&](std::size_t idx, MetricStat& out) {
    double mean = 0.0;
    for (const auto& row : report.per_seed) mean += row[idx];
    mean /= static_cast<double>(report.per_seed.size());
    double var = 0.0;
    for (const auto& row : report.per_seed) var += (row[idx] - mean) * (row[idx] - mean);
    var /= static_cast<double>(report.per_seed.size());
    out = {mean, var, std::sqrt(var)};
  };
  fill(0, report.ndcg_a);
  fill(1, report.hr_a);
  fill(2, report.ndcg_b);
  fill(3, report.hr_b);
  return report;
}

}  // namespace

MetricsReport evaluate(const model::Model& model, const DatasetSplit& split, Split which,
                       const EvalOptions& options, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("evaluate needs at least one seed");
  const auto entries =
      chosen_entries(split, which, options.max_users, seeds.empty() ? 0 : seeds[0]);
  std::vector<SeedStats> stats;
  std::size_t users_a = 0, users_b = 0;
  for (const std::uint64_t seed : seeds) {
    std::vector<RankResult> results;
    results.reserve(entries.size());
    for (const auto& entry : entries) {
      const auto episode = episodes::build_eval_episode(
          split, which, entry, options.n_support, options.n_negatives, model.config().seq_len,
          options.all_user_support, seed);
      const auto trace = model.forward(episode, model::Mode::inference,
                                       rng::mix(seed, "eval_forward"));
      const auto scores = trace.prediction_values();
      results.push_back({split.record_view(which)[entry.user_index].user, entry.domain,
                         rank_positive(scores, 0), scores.size()});
    }
    stats.push_back(reduce(results, users_a, users_b));
  }
  return aggregate_seeds(stats, seeds, users_a, users_b);
}

MetricsReport random_baseline(const DatasetSplit& split, Split which, std::size_t n_negatives,
                              std::uint64_t seed) {
  const auto& entries = split.entries(which);
  std::vector<RankResult> results;
  results.reserve(entries.size());
  for (const auto& entry : entries) {
    const auto& user = split.record_view(which)[entry.user_index].user;
    // scores drawn per (seed, user, domain) so processing order is moot
    rng::Rng r(rng::mix(rng::mix(rng::mix(seed, "random_baseline"), rng::hash_str(user)),
                        static_cast<std::uint64_t>(entry.domain)));
    std::vector<double> scores(n_negatives + 1);
    for (auto& s : scores) s = r.uniform();
    results.push_back({user, entry.domain, rank_positive(scores, 0), scores.size()});
  }
  std::size_t users_a = 0, users_b = 0;
  std::vector<SeedStats> stats{reduce(results, users_a, users_b)};
  const std::uint64_t seed_list[1] = {seed};
  return aggregate_seeds(stats, seed_list, users_a, users_b);
}

}  // namespace cdsrnp::eval
