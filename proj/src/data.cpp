#include "cdsrnp/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "cdsrnp/rng.hpp"

namespace cdsrnp::data {

std::size_t Vocabulary::add(const std::string& item) {
  auto it = index_.find(item);
  if (it != index_.end()) return it->second;
  items_.push_back(item);
  const std::size_t idx = items_.size();  // 1-based; 0 is pad
  index_.emplace(item, idx);
  return idx;
}

std::size_t Vocabulary::index_of(const std::string& item) const {
  auto it = index_.find(item);
  if (it == index_.end()) throw std::out_of_range("unknown item '" + item + "'");
  return it->second;
}

const std::string& Vocabulary::item(std::size_t index) const {
  if (index == 0 || index > items_.size()) {
    throw std::out_of_range("vocabulary index " + std::to_string(index) + " out of range");
  }
  return items_[index - 1];
}

std::vector<Interaction> load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction log '" + path + "'");
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    std::array<std::string, 4> fields;
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        if (field >= 4) {
          throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                   ": expected 4 tab-separated fields");
        }
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 4 tab-separated fields, got " + std::to_string(field));
    }
    Interaction ev;
    ev.user = fields[0];
    ev.item = fields[1];
    if (fields[2] == "A") {
      ev.domain = Domain::A;
    } else if (fields[2] == "B") {
      ev.domain = Domain::B;
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad domain '" +
                               fields[2] + "' (expected A or B)");
    }
    try {
      std::size_t pos = 0;
      ev.timestamp = std::stoll(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad timestamp '" +
                               fields[3] + "'");
    }
    if (ev.user.empty() || ev.item.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty user or item id");
    }
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<Interaction> filter_sparse(std::vector<Interaction> interactions,
                                       std::size_t min_user, std::size_t min_item) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, std::size_t> user_count;
    std::unordered_map<std::string, std::size_t> item_count;  // keyed by domain-qualified id
    for (const auto& ev : interactions) {
      ++user_count[ev.user];
      ++item_count[domain_letter(ev.domain) + ev.item];
    }
    std::vector<Interaction> kept;
    kept.reserve(interactions.size());
    for (auto& ev : interactions) {
      if (user_count[ev.user] < min_user) {
        changed = true;
        continue;
      }
      if (item_count[domain_letter(ev.domain) + ev.item] < min_item) {
        changed = true;
        continue;
      }
      kept.push_back(std::move(ev));
    }
    interactions = std::move(kept);
  }
  return interactions;
}

RecordSet build_user_records(const std::vector<Interaction>& interactions) {
  RecordSet rs;
  // (user_index, domain, item_index, timestamp, input order)
  struct Event {
    std::size_t user;
    Domain domain;
    std::size_t item;
    std::int64_t ts;
  };
  std::vector<Event> events;
  events.reserve(interactions.size());
  for (const auto& ev : interactions) {
    auto [it, fresh] = rs.user_index.emplace(ev.user, rs.records.size());
    if (fresh) rs.records.push_back(UserRecord{ev.user, {}, {}, false});
    Vocabulary& vocab = ev.domain == Domain::A ? rs.vocabs.a : rs.vocabs.b;
    events.push_back({it->second, ev.domain, vocab.add(ev.item), ev.timestamp});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& x, const Event& y) { return x.ts < y.ts; });
  for (const auto& ev : events) rs.records[ev.user].seq(ev.domain).push_back(ev.item);
  for (auto& rec : rs.records) rec.overlapped = !rec.seq_a.empty() && !rec.seq_b.empty();
  return rs;
}

std::vector<UserRecord> apply_overlap_ratio(std::vector<UserRecord> records, double k_u,
                                            std::uint64_t seed) {
  if (k_u < 0.0 || k_u > 1.0) {
    throw std::invalid_argument("k_u must lie in [0, 1], got " + std::to_string(k_u));
  }
  std::vector<std::size_t> overlapped;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].overlapped) overlapped.push_back(i);
  }
  const double n = static_cast<double>(records.size());
  const std::size_t n_non = records.size() - overlapped.size();
  const double want = std::floor(k_u * n - static_cast<double>(n_non) + 1e-9);
  if (want <= 0.0) return records;
  const std::size_t conversions = std::min(static_cast<std::size_t>(want), overlapped.size());

  rng::Rng r(rng::mix(seed, "overlap_ratio"));
  r.shuffle(overlapped);
  for (std::size_t i = 0; i < conversions; ++i) {
    UserRecord& rec = records[overlapped[i]];
    const Domain keep = r.below(2) == 0 ? Domain::A : Domain::B;
    rec.seq(other_domain(keep)).clear();
    rec.overlapped = false;
  }
  return records;
}

std::vector<std::size_t> visible_history(const UserRecord& record, Domain domain) {
  const auto& seq = record.seq(domain);
  if (seq.empty()) return {};
  return std::vector<std::size_t>(seq.begin(), seq.end() - 1);
}

DatasetSplit split_leave_recent(RecordSet record_set, SplitRatios ratios, std::uint64_t seed) {
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  DatasetSplit split;
  split.vocabs = std::move(record_set.vocabs);
  split.records = std::move(record_set.records);
  split.user_index = std::move(record_set.user_index);

  std::vector<TargetEntry> entries;
  for (std::size_t u = 0; u < split.records.size(); ++u) {
    for (Domain d : {Domain::A, Domain::B}) {
      const auto& seq = split.records[u].seq(d);
      if (!seq.empty()) entries.push_back({u, seq.back(), d});
    }
  }
  rng::Rng r(rng::mix(seed, "split"));
  r.shuffle(entries);
  const std::size_t n = entries.size();
  const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios.validation * n + 1e-9));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(ratios.test * n + 1e-9));
  const std::size_t n_train = n - n_val - n_test;
  auto by_user_domain = [](const TargetEntry& x, const TargetEntry& y) {
    return std::tie(x.user_index, x.domain) < std::tie(y.user_index, y.domain);
  };
  split.train.assign(entries.begin(), entries.begin() + n_train);
  split.validation.assign(entries.begin() + n_train, entries.begin() + n_train + n_val);
  split.test.assign(entries.begin() + n_train + n_val, entries.end());
  std::sort(split.train.begin(), split.train.end(), by_user_domain);
  std::sort(split.validation.begin(), split.validation.end(), by_user_domain);
  std::sort(split.test.begin(), split.test.end(), by_user_domain);

  split.test_records = split.records;
  return split;
}

void apply_overlap_to_split(DatasetSplit& split, double k_u, std::uint64_t seed) {
  split.records = apply_overlap_ratio(std::move(split.records), k_u, seed);
  split.k_u = k_u;
  auto domain_kept = [&](const TargetEntry& e) {
    return !split.records[e.user_index].seq(e.domain).empty();
  };
  std::erase_if(split.train, [&](const TargetEntry& e) { return !domain_kept(e); });
  std::erase_if(split.validation, [&](const TargetEntry& e) { return !domain_kept(e); });
}

std::vector<std::size_t> sample_negatives(std::size_t vocab_size,
                                          const std::unordered_set<std::size_t>& exclude,
                                          std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> pool;
  pool.reserve(vocab_size);
  for (std::size_t item = 1; item <= vocab_size; ++item) {
    if (!exclude.count(item)) pool.push_back(item);
  }
  if (k > pool.size()) {
    throw std::invalid_argument("insufficient candidate pool: need " + std::to_string(k) +
                                " negatives, have " + std::to_string(pool.size()));
  }
  rng::Rng r(rng::mix(seed, "negatives"));
  // partial Fisher-Yates: first k entries become the sample
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(r.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::vector<std::size_t> pad_or_truncate(const std::vector<std::size_t>& seq, std::size_t t) {
  if (t == 0) throw std::invalid_argument("sequence length must be positive");
  std::vector<std::size_t> out(t, 0);
  const std::size_t n = std::min(seq.size(), t);
  std::copy(seq.end() - n, seq.end(), out.end() - n);
  return out;
}

double SynthData::affinity(std::size_t user, Domain domain, std::size_t item) const {
  const auto& shared = domain == Domain::A ? item_shared_a : item_shared_b;
  const auto& specific = domain == Domain::A ? item_specific_a : item_specific_b;
  const auto& taste = domain == Domain::A ? user_specific_a : user_specific_b;
  double dot = 0.0;
  for (std::size_t l = 0; l < user_shared[user].size(); ++l) {
    dot += user_shared[user][l] * shared[item][l] + taste[user][l] * specific[item][l];
  }
  return dot;
}

SynthData synth_generate(const SynthConfig& config) {
  if (config.users == 0 || config.items_a == 0 || config.items_b == 0) {
    throw std::invalid_argument("synth: users and item counts must be positive");
  }
  if (config.overlap_frac < 0.0 || config.overlap_frac > 1.0) {
    throw std::invalid_argument("synth: overlap_frac must lie in [0, 1]");
  }
  if (config.latent_dim == 0) throw std::invalid_argument("synth: latent_dim must be positive");
  if (config.min_len == 0 || config.min_len > config.max_len) {
    throw std::invalid_argument("synth: need 1 <= min_len <= max_len");
  }

  SynthData out;
  rng::Rng r(rng::mix(config.seed, "synth"));

  auto draw_latent = [&]() {
    std::vector<double> v(config.latent_dim);
    for (auto& x : v) x = r.normal();
    return v;
  };
  auto fill = [&](std::vector<std::vector<double>>& dst, std::size_t n) {
    dst.reserve(n);
    for (std::size_t i = 0; i < n; ++i) dst.push_back(draw_latent());
  };
  fill(out.user_shared, config.users);
  fill(out.user_specific_a, config.users);
  fill(out.user_specific_b, config.users);
  fill(out.item_shared_a, config.items_a);
  fill(out.item_specific_a, config.items_a);
  fill(out.item_shared_b, config.items_b);
  fill(out.item_specific_b, config.items_b);

  // uniformly chosen overlapped subset of round(frac * users) users
  std::vector<std::size_t> order(config.users);
  std::iota(order.begin(), order.end(), 0);
  r.shuffle(order);
  const auto n_overlap =
      static_cast<std::size_t>(std::llround(config.overlap_frac * static_cast<double>(config.users)));
  std::vector<bool> overlapped(config.users, false);
  for (std::size_t i = 0; i < n_overlap; ++i) overlapped[order[i]] = true;

  constexpr double kSignalGain = 3.0;  // softmax sharpness of the planted affinities
  const double norm = 1.0 / std::sqrt(2.0 * static_cast<double>(config.latent_dim));

  auto choice_distribution = [&](std::size_t user, Domain d) {
    const std::size_t items = d == Domain::A ? config.items_a : config.items_b;
    std::vector<double> cdf(items);
    double mx = -1e300;
    for (std::size_t i = 0; i < items; ++i) {
      cdf[i] = kSignalGain * out.affinity(user, d, i) * norm;
      mx = std::max(mx, cdf[i]);
    }
    double acc = 0.0;
    for (auto& v : cdf) {
      acc += std::exp(v - mx);
      v = acc;
    }
    for (auto& v : cdf) v /= acc;
    return cdf;
  };
  auto sample_from_cdf = [&](const std::vector<double>& cdf) {
    const double u = r.uniform();
    return static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  char id[32];
  for (std::size_t u = 0; u < config.users; ++u) {
    std::snprintf(id, sizeof(id), "u%05zu", u);
    const std::string user_id = id;
    out.user_of_id.emplace(user_id, u);

    std::vector<Domain> active;
    if (overlapped[u]) {
      active = {Domain::A, Domain::B};
    } else {
      active = {r.below(2) == 0 ? Domain::A : Domain::B};
    }
    std::vector<std::pair<Domain, std::size_t>> events;  // (domain, item 0-based)
    for (Domain d : active) {
      const auto cdf = choice_distribution(u, d);
      const auto len = static_cast<std::size_t>(
          r.range(static_cast<std::int64_t>(config.min_len),
                  static_cast<std::int64_t>(config.max_len)));
      for (std::size_t s = 0; s < len; ++s) events.emplace_back(d, sample_from_cdf(cdf));
    }
    r.shuffle(events);  // interleave the two domains in time
    for (std::size_t s = 0; s < events.size(); ++s) {
      const auto [d, item] = events[s];
      std::snprintf(id, sizeof(id), "%c%04zu", d == Domain::A ? 'a' : 'b', item);
      const std::string item_id = id;
      (d == Domain::A ? out.item_of_id_a : out.item_of_id_b).emplace(item_id, item);
      out.interactions.push_back(
          {user_id, item_id, d, static_cast<std::int64_t>(s + 1)});
    }
  }
  return out;
}

DatasetSplit prepare_split(const std::vector<Interaction>& interactions, double k_u,
                           std::uint64_t seed, std::size_t min_user, std::size_t min_item,
                           SplitRatios ratios) {
  auto filtered = filter_sparse(interactions, min_user, min_item);
  auto records = build_user_records(filtered);
  auto split = split_leave_recent(std::move(records), ratios, seed);
  apply_overlap_to_split(split, k_u, rng::mix(seed, "k_u"));
  return split;
}

}  // namespace cdsrnp::data
