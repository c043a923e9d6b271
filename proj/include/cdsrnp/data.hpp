#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cdsrnp::data {

enum class Domain : std::uint8_t { A = 0, B = 1 };

inline char domain_letter(Domain d) { return d == Domain::A ? 'A' : 'B'; }
inline Domain other_domain(Domain d) { return d == Domain::A ? Domain::B : Domain::A; }

/// One observed (user, item, domain, timestamp) event.
struct Interaction {
  std::string user;
  std::string item;
  Domain domain;
  std::int64_t timestamp;
};

// Item id <-> index mapping for one domain. Index 0 is the pad token and
// never maps to a real item; real items occupy 1..size().
class Vocabulary {
 public:
  /// Index of item, inserting in first-appearance order if new.
  std::size_t add(const std::string& item);

  std::size_t index_of(const std::string& item) const;
  const std::string& item(std::size_t index) const;
  std::size_t size() const { return items_.size(); }  // excludes pad

 private:
  std::vector<std::string> items_;  // items_[i] has index i + 1
  std::unordered_map<std::string, std::size_t> index_;
};

struct VocabularyPair {
  Vocabulary a, b;

  const Vocabulary& of(Domain d) const { return d == Domain::A ? a : b; }

  /// Shared-table index: domain A keeps its local index, domain B items
  /// shift by |V^A|; pad stays 0.
  std::size_t global_index(Domain d, std::size_t local) const {
    if (local == 0) return 0;
    return d == Domain::A ? local : local + a.size();
  }

  std::size_t global_size() const { return a.size() + b.size(); }  // excludes pad
};

/// One user's time-ordered item-index sequences per domain.
struct UserRecord {
  std::string user;
  std::vector<std::size_t> seq_a, seq_b;
  bool overlapped = false;

  const std::vector<std::size_t>& seq(Domain d) const { return d == Domain::A ? seq_a : seq_b; }
  std::vector<std::size_t>& seq(Domain d) { return d == Domain::A ? seq_a : seq_b; }
};

struct RecordSet {
  VocabularyPair vocabs;
  std::vector<UserRecord> records;
  std::unordered_map<std::string, std::size_t> user_index;
};

/// One held-out (user, target item, domain) evaluation triple.
struct TargetEntry {
  std::size_t user_index;
  std::size_t item;  // local index in its domain
  Domain domain;
};

enum class Split : std::uint8_t { train, validation, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    default: return "test";
  }
}

// Evaluation targets partitioned per user and domain, plus two record
// views: `records` carries the overlap-ratio-adjusted sequences used for
// training and validation inputs, `test_records` the untouched originals
// used for test inputs.
struct DatasetSplit {
  VocabularyPair vocabs;
  std::vector<UserRecord> records;
  std::vector<UserRecord> test_records;
  std::unordered_map<std::string, std::size_t> user_index;
  std::vector<TargetEntry> train, validation, test;
  double k_u = 0.0;

  const std::vector<TargetEntry>& entries(Split s) const {
    return s == Split::train ? train : (s == Split::validation ? validation : test);
  }
  const std::vector<UserRecord>& record_view(Split s) const {
    return s == Split::test ? test_records : records;
  }
};

struct SplitRatios {
  double train = 0.8, validation = 0.1, test = 0.1;
};

/// Parse a tab-separated interaction log (user, item, domain, timestamp).
/// Lines starting with '#' are comments. Malformed rows raise errors that
/// name the offending line.
std::vector<Interaction> load_interactions(const std::string& path);

/// Iteratively drop users with fewer than min_user events and items with
/// fewer than min_item events until nothing changes. Input order is kept.
std::vector<Interaction> filter_sparse(std::vector<Interaction> interactions,
                                       std::size_t min_user = 10, std::size_t min_item = 5);

/// Group filtered interactions into per-user, per-domain sequences sorted
/// by timestamp (ties keep input order). Vocabularies are built in
/// first-appearance order.
RecordSet build_user_records(const std::vector<Interaction>& interactions);

/// Convert uniformly chosen overlapped users into single-domain users
/// (each keeps one coin-flipped domain) until non-overlapped users make up
/// fraction k_u of all users, or no overlapped users remain.
std::vector<UserRecord> apply_overlap_ratio(std::vector<UserRecord> records, double k_u,
                                            std::uint64_t seed);

/// Hold out each user's chronologically last item per domain and deal the
/// resulting (user, target, domain) triples into train/validation/test by
/// a seeded shuffle with exact floor proportions.
DatasetSplit split_leave_recent(RecordSet record_set, SplitRatios ratios, std::uint64_t seed);

/// Apply the overlap-ratio control to a split's train/validation view.
/// Targets whose domain was dropped for a converted user leave the train
/// and validation lists; test entries and test inputs are untouched.
void apply_overlap_to_split(DatasetSplit& split, double k_u, std::uint64_t seed);

/// The input-visible part of a user's sequence in one domain: everything
/// before the held-out last item. Empty sequences stay empty.
std::vector<std::size_t> visible_history(const UserRecord& record, Domain domain);

/// Draw k distinct item indices uniformly from 1..vocab_size excluding
/// `exclude` (the user's interacted items). Deterministic per seed.
std::vector<std::size_t> sample_negatives(std::size_t vocab_size,
                                          const std::unordered_set<std::size_t>& exclude,
                                          std::size_t k, std::uint64_t seed);

/// Left-pad with 0 or keep the most recent suffix so the result has
/// exactly length t.
std::vector<std::size_t> pad_or_truncate(const std::vector<std::size_t>& seq, std::size_t t);

struct SynthConfig {
  std::size_t users = 2000;
  std::size_t items_a = 200, items_b = 200;
  double overlap_frac = 0.5;
  std::size_t latent_dim = 4;
  std::size_t min_len = 10, max_len = 20;
  std::uint64_t seed = 1;
};

// Synthetic cross-domain log with a planted two-part interest signal.
// Every user draws a shared latent reused across domains (domain-A
// behavior predicts domain-B choices) plus an independent per-domain
// taste vector, so each domain also carries structure the other cannot
// explain. Latents are kept for oracle scoring in tests.
struct SynthData {
  std::vector<Interaction> interactions;
  std::vector<std::vector<double>> user_shared;        // by generated user index
  std::vector<std::vector<double>> user_specific_a, user_specific_b;
  std::vector<std::vector<double>> item_shared_a, item_shared_b;  // by item index (0-based)
  std::vector<std::vector<double>> item_specific_a, item_specific_b;
  std::unordered_map<std::string, std::size_t> user_of_id;
  std::unordered_map<std::string, std::size_t> item_of_id_a, item_of_id_b;

  /// The generator's own affinity: the oracle score of item i for user u.
  double affinity(std::size_t user, Domain domain, std::size_t item) const;
};

SynthData synth_generate(const SynthConfig& config);

/// Convenience pipeline: interactions -> filter -> records -> split with
/// overlap control. Thresholds follow the standard protocol defaults.
DatasetSplit prepare_split(const std::vector<Interaction>& interactions, double k_u,
                           std::uint64_t seed, std::size_t min_user = 10, std::size_t min_item = 5,
                           SplitRatios ratios = {});

}  // namespace cdsrnp::data
