#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cdsrnp/data.hpp"
#include "cdsrnp/model.hpp"
#include "cdsrnp/param_store.hpp"

namespace cdsrnp::train {

/// How the weight penalty reads lambda * ||theta||: `squared` is the
/// usual lambda * sum(theta^2); `norm` is the literal un-squared norm.
enum class RegMode : std::uint8_t { squared, norm };

RegMode reg_mode_from_name(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-3;
  double lambda_reg = 1e-5;
  RegMode reg_mode = RegMode::squared;
  std::size_t epochs = 10;
  std::size_t episodes_per_epoch = 0;  // 0: one pass over train targets per epoch
  std::size_t n_support = 10;
  std::size_t n_query = 20;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  bool all_user_support = false;
  // per-epoch validation protocol
  std::size_t n_negatives_val = 199;
  std::size_t val_max_users = 200;

  void validate() const;
};

/// Per-parameter Adam moment buffers plus the shared step counter.
struct AdamState {
  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Moments> moments;
  std::uint64_t step = 0;
};

/// (1/n) sum (y_i - yhat_i)^2 as a graph node over scalar predictions.
ad::TensorPtr mse_loss(const std::vector<ad::TensorPtr>& predictions,
                       const std::vector<double>& labels);

/// lambda * sum(theta^2), or lambda * sqrt(sum(theta^2)) in norm mode.
ad::TensorPtr regularizer(const ad::ParameterStore& params, double lambda, RegMode mode);

/// Total objective: reconstruction + KL + weight penalty.
ad::TensorPtr total_loss(const ad::TensorPtr& rec, const ad::TensorPtr& kl,
                         const ad::ParameterStore& params, double lambda,
                         RegMode mode = RegMode::squared);

/// One bias-corrected Adam update over every parameter, consuming the
/// gradients currently stored. `frozen_prefixes` names parameters whose
/// first N elements must not move (pinned pad rows).
void adam_step(ad::ParameterStore& params, AdamState& state, const TrainConfig& config,
               const std::vector<std::pair<std::string, std::size_t>>& frozen_prefixes = {});

struct LogRecord {
  std::size_t epoch = 0;
  std::int64_t episode = 0;  // -1 flags the end-of-epoch validation record
  double loss_total = 0, loss_rec = 0, loss_kl = 0, loss_reg = 0;
  double val_ndcg10_a = 0, val_hr10_a = 0, val_ndcg10_b = 0, val_hr10_b = 0;
  std::int64_t wall_ms = 0;
};

std::string log_record_json(const LogRecord& record);

struct TrainResult {
  model::Model model;             // final parameters
  ad::ParameterStore best_params; // snapshot at the best validation NDCG@10
  double best_val_ndcg = 0.0;
  std::size_t best_epoch = 0;
  std::vector<LogRecord> log;
};

/// Episodic training: per epoch run `episodes_per_epoch` fresh episodes
/// (forward in train mode, total loss, backward, Adam) and then a
/// validation pass. Fully deterministic given the dataset, configs, and
/// seed. Log records stream to `metrics_out` when given.
TrainResult train_loop(const data::DatasetSplit& split, const model::ModelConfig& model_config,
                       const TrainConfig& config, std::ostream* metrics_out = nullptr);

struct AuditEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct AuditReport {
  std::vector<AuditEntry> entries;  // one per parameter, lexicographic
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t checked_elements = 0;
};

/// Hook for corrupting analytic gradients before comparison; exercises
/// the audit's ability to detect a broken backward rule.
using GradTamper = std::function<void(const std::string& name, std::vector<double>& grad)>;

/// Compare every parameter gradient of one episode's total loss against
/// central finite differences (step 1e-5) on a synthetic episode with
/// epsilon_mode forced to zero. Reported per-element error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
AuditReport gradient_audit(const model::ModelConfig& model_config, std::size_t n_support,
                           std::size_t n_query, std::uint64_t seed,
                           const GradTamper& tamper = {});

}  // namespace cdsrnp::train
