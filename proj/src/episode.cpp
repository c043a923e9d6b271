#include "cdsrnp/episode.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "cdsrnp/rng.hpp"

namespace cdsrnp::episodes {

using data::DatasetSplit;
using data::Domain;
using data::TargetEntry;
using data::UserRecord;

namespace {

Sample make_sample(const UserRecord& record, std::size_t user_index,
                   std::vector<std::size_t> in_domain_seq, Domain candidate_domain,
                   std::size_t candidate_local, double label, std::size_t seq_len,
                   const data::VocabularyPair& vocabs) {
  Sample s;
  const auto other = data::other_domain(candidate_domain);
  const auto other_seq = data::visible_history(record, other);
  const auto& a_seq = candidate_domain == Domain::A ? in_domain_seq : other_seq;
  const auto& b_seq = candidate_domain == Domain::A ? other_seq : in_domain_seq;
  s.x_a = data::pad_or_truncate(a_seq, seq_len);
  s.x_b = data::pad_or_truncate(b_seq, seq_len);
  s.candidate = vocabs.global_index(candidate_domain, candidate_local);
  s.candidate_domain = candidate_domain;
  s.label = label;
  s.user_index = user_index;
  return s;
}

/// Next-item positive: the user's most recent visible item is the
/// candidate, everything before it the in-domain input.
Sample support_positive(const DatasetSplit& split, std::size_t user_index, rng::Rng& r,
                        std::size_t seq_len) {
  const UserRecord& rec = split.records[user_index];
  std::vector<Domain> usable;
  for (Domain d : {Domain::A, Domain::B}) {
    if (data::visible_history(rec, d).size() >= 1) usable.push_back(d);
  }
  const Domain d = usable.size() == 1 ? usable[0] : usable[r.below(usable.size())];
  auto visible = data::visible_history(rec, d);
  const std::size_t candidate = visible.back();
  visible.pop_back();
  return make_sample(rec, user_index, std::move(visible), d, candidate, 1.0, seq_len,
                     split.vocabs);
}

std::unordered_set<std::size_t> interacted_items(const UserRecord& rec, Domain d) {
  const auto& seq = rec.seq(d);
  return std::unordered_set<std::size_t>(seq.begin(), seq.end());
}

std::vector<std::size_t> pick_support_users(const DatasetSplit& split, bool all_users,
                                            std::size_t n_support, rng::Rng& r) {
  auto pool = support_pool(split, all_users);
  if (pool.size() < n_support) {
    throw std::runtime_error("episode protocol: need " + std::to_string(n_support) +
                             " support users, only " + std::to_string(pool.size()) +
                             " eligible");
  }
  for (std::size_t i = 0; i < n_support; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(r.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_support);
  return pool;
}

}  // namespace

std::vector<std::size_t> support_pool(const DatasetSplit& split, bool all_users) {
  std::vector<std::uint8_t> in_train(split.records.size(), 0);
  for (const auto& e : split.train) in_train[e.user_index] = 1;
  std::vector<std::size_t> pool;
  for (std::size_t u = 0; u < split.records.size(); ++u) {
    if (!in_train[u]) continue;
    const UserRecord& rec = split.records[u];
    if (!all_users && !rec.overlapped) continue;
    if (data::visible_history(rec, Domain::A).empty() &&
        data::visible_history(rec, Domain::B).empty()) {
      continue;
    }
    pool.push_back(u);
  }
  return pool;
}

Episode build_training_episode(const DatasetSplit& split, const EpisodeOptions& options,
                               std::uint64_t seed) {
  if (options.n_query % 2 != 0) {
    throw std::invalid_argument("query size must be even (half positives, half negatives)");
  }
  const std::size_t n_pos = options.n_query / 2;
  if (split.train.size() < n_pos) {
    throw std::runtime_error("episode protocol: need " + std::to_string(n_pos) +
                             " training targets, have " + std::to_string(split.train.size()));
  }
  rng::Rng r(rng::mix(seed, "episode"));
  Episode ep;

  for (std::size_t u : pick_support_users(split, options.all_user_support, options.n_support, r)) {
    ep.support.push_back(support_positive(split, u, r, options.seq_len));
  }

  // Query positives: shuffled training targets, preferring distinct users.
  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  r.shuffle(order);
  std::vector<std::size_t> chosen;
  std::unordered_set<std::size_t> used_users;
  for (std::size_t idx : order) {
    if (chosen.size() == n_pos) break;
    if (used_users.insert(split.train[idx].user_index).second) chosen.push_back(idx);
  }
  for (std::size_t idx : order) {
    if (chosen.size() == n_pos) break;
    if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
  }

  std::vector<Sample> negatives;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const TargetEntry& e = split.train[chosen[i]];
    const UserRecord& rec = split.records[e.user_index];
    auto pos = make_sample(rec, e.user_index, data::visible_history(rec, e.domain), e.domain,
                           e.item, 1.0, options.seq_len, split.vocabs);
    const auto neg_items = data::sample_negatives(
        split.vocabs.of(e.domain).size(), interacted_items(rec, e.domain), 1,
        rng::mix(rng::mix(seed, "train_negative"), i));
    Sample neg = pos;
    neg.candidate = split.vocabs.global_index(e.domain, neg_items[0]);
    neg.label = 0.0;
    ep.query.push_back(std::move(pos));
    negatives.push_back(std::move(neg));
  }
  ep.query.insert(ep.query.end(), std::make_move_iterator(negatives.begin()),
                  std::make_move_iterator(negatives.end()));
  return ep;
}

Episode build_eval_episode(const DatasetSplit& split, data::Split which,
                           const TargetEntry& target, std::size_t n_support,
                           std::size_t n_negatives, std::size_t seq_len, bool all_user_support,
                           std::uint64_t seed) {
  Episode ep;
  rng::Rng support_rng(rng::mix(seed, "eval_support"));
  for (std::size_t u : pick_support_users(split, all_user_support, n_support, support_rng)) {
    ep.support.push_back(support_positive(split, u, support_rng, seq_len));
  }

  const UserRecord& rec = split.record_view(which)[target.user_index];
  ep.query.push_back(make_sample(rec, target.user_index,
                                 data::visible_history(rec, target.domain), target.domain,
                                 target.item, 1.0, seq_len, split.vocabs));
  const std::uint64_t neg_seed =
      rng::mix(rng::mix(rng::mix(seed, "eval_negatives"), rng::hash_str(rec.user)),
               static_cast<std::uint64_t>(target.domain));
  const auto neg_items = data::sample_negatives(split.vocabs.of(target.domain).size(),
                                                interacted_items(rec, target.domain),
                                                n_negatives, neg_seed);
  for (std::size_t item : neg_items) {
    Sample neg = ep.query.front();
    neg.candidate = split.vocabs.global_index(target.domain, item);
    neg.label = 0.0;
    ep.query.push_back(std::move(neg));
  }
  return ep;
}

}  // namespace cdsrnp::episodes
