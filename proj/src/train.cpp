#include "cdsrnp/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cdsrnp/episode.hpp"
#include "cdsrnp/eval.hpp"
#include "cdsrnp/rng.hpp"

namespace cdsrnp::train {

using ad::TensorPtr;

RegMode reg_mode_from_name(const std::string& name) {
  if (name == "squared") return RegMode::squared;
  if (name == "norm") return RegMode::norm;
  throw std::invalid_argument("unknown regularizer mode '" + name + "'");
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (lambda_reg < 0.0) throw std::invalid_argument("lambda must be non-negative");
  if (n_support == 0 || n_query == 0) {
    throw std::invalid_argument("support and query sizes must be positive");
  }
  if (n_query % 2 != 0) throw std::invalid_argument("query size must be even");
  if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0 ||
      adam_eps <= 0.0) {
    throw std::invalid_argument("Adam hyperparameters out of range");
  }
}

ad::TensorPtr mse_loss(const std::vector<TensorPtr>& predictions,
                       const std::vector<double>& labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw std::invalid_argument("mse_loss: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  const auto yhat = ad::concat(predictions, 0);
  const auto y = ad::make_tensor({labels.size()}, labels);
  const auto diff = ad::sub(y, yhat);
  return ad::mean(ad::mul(diff, diff), 0);
}

ad::TensorPtr regularizer(const ad::ParameterStore& params, double lambda, RegMode mode) {
  TensorPtr sum_sq;
  for (const auto& [name, t] : params) {
    auto term = ad::sum_all(ad::mul(t, t));
    sum_sq = sum_sq ? ad::add(sum_sq, term) : term;
  }
  if (!sum_sq) return ad::make_scalar(0.0);
  if (mode == RegMode::norm) sum_sq = ad::sqrt(sum_sq);
  return ad::scale(sum_sq, lambda);
}

ad::TensorPtr total_loss(const TensorPtr& rec, const TensorPtr& kl,
                         const ad::ParameterStore& params, double lambda, RegMode mode) {
  return ad::add(ad::add(rec, kl), regularizer(params, lambda, mode));
}

void adam_step(ad::ParameterStore& params, AdamState& state, const TrainConfig& config,
               const std::vector<std::pair<std::string, std::size_t>>& frozen_prefixes) {
  state.step += 1;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& [name, t] : params) {
    auto& moments = state.moments[name];
    if (moments.m.empty()) {
      moments.m.assign(t->size(), 0.0);
      moments.v.assign(t->size(), 0.0);
    }
    if (moments.m.size() != t->size()) {
      throw std::invalid_argument("Adam state shape mismatch for '" + name + "'");
    }
    std::size_t first = 0;
    for (const auto& [frozen_name, count] : frozen_prefixes) {
      if (frozen_name == name) first = count;
    }
    for (std::size_t i = first; i < t->size(); ++i) {
      const double g = t->grad[i];
      moments.m[i] = b1 * moments.m[i] + (1.0 - b1) * g;
      moments.v[i] = b2 * moments.v[i] + (1.0 - b2) * g * g;
      const double mhat = moments.m[i] / bias1;
      const double vhat = moments.v[i] / bias2;
      t->data[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
}

std::string log_record_json(const LogRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"epoch\":%zu,\"episode\":%lld,\"loss_total\":%.17g,\"loss_rec\":%.17g,"
                "\"loss_kl\":%.17g,\"loss_reg\":%.17g,\"val_ndcg10_a\":%.17g,"
                "\"val_hr10_a\":%.17g,\"val_ndcg10_b\":%.17g,\"val_hr10_b\":%.17g,"
                "\"wall_ms\":%lld}",
                r.epoch, static_cast<long long>(r.episode), r.loss_total, r.loss_rec, r.loss_kl,
                r.loss_reg, r.val_ndcg10_a, r.val_hr10_a, r.val_ndcg10_b, r.val_hr10_b,
                static_cast<long long>(r.wall_ms));
  return buf;
}

TrainResult train_loop(const data::DatasetSplit& split, const model::ModelConfig& model_config,
                       const TrainConfig& config, std::ostream* metrics_out) {
  config.validate();
  model_config.validate();

  const auto t0 = std::chrono::steady_clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  model::Model net(model_config, split.vocabs.a.size(), split.vocabs.b.size(), config.seed);
  AdamState adam;
  std::vector<std::pair<std::string, std::size_t>> frozen;
  for (const auto& name : net.pad_pinned_params()) frozen.emplace_back(name, model_config.embed_dim);

  const std::size_t n_pos = config.n_query / 2;
  const std::size_t episodes =
      config.episodes_per_epoch > 0
          ? config.episodes_per_epoch
          : (split.train.size() + n_pos - 1) / std::max<std::size_t>(n_pos, 1);

  episodes::EpisodeOptions ep_options{config.n_support, config.n_query, model_config.seq_len,
                                      config.all_user_support};

  TrainResult result{std::move(net), {}, 0.0, 0, {}};
  result.best_params = result.model.params().clone();
  result.best_val_ndcg = -1.0;

  LogRecord latest_val{};
  auto emit = [&](const LogRecord& rec) {
    result.log.push_back(rec);
    if (metrics_out) *metrics_out << log_record_json(rec) << "\n";
  };

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < episodes; ++i) {
      const std::uint64_t episode_seed =
          rng::mix(rng::mix(rng::mix(config.seed, "train_episode"), epoch), i);
      const auto episode = episodes::build_training_episode(split, ep_options, episode_seed);
      const auto trace =
          result.model.forward(episode, model::Mode::train, rng::mix(episode_seed, "fwd"));
      const auto rec = mse_loss(trace.predictions, trace.query_labels);
      const auto kl = model::kl_divergence(trace.query, trace.support);
      const auto reg = regularizer(result.model.params(), config.lambda_reg, config.reg_mode);
      const auto total = ad::add(ad::add(rec, kl), reg);

      result.model.params().zero_grad();
      ad::backward(total);
      result.model.clear_pad_gradients();
      adam_step(result.model.params(), adam, config, frozen);

      LogRecord record{epoch,
                       static_cast<std::int64_t>(i),
                       total->scalar(),
                       rec->scalar(),
                       kl->scalar(),
                       reg->scalar(),
                       latest_val.val_ndcg10_a,
                       latest_val.val_hr10_a,
                       latest_val.val_ndcg10_b,
                       latest_val.val_hr10_b,
                       wall_ms()};
      emit(record);
    }

    if (!split.validation.empty()) {
      eval::EvalOptions val_options{config.n_negatives_val, config.n_support,
                                    config.val_max_users, config.all_user_support};
      const std::uint64_t val_seed[1] = {rng::mix(config.seed, "validation")};
      const auto report = eval::evaluate(result.model, split, data::Split::validation,
                                         val_options, val_seed);
      latest_val.val_ndcg10_a = report.ndcg_a.mean;
      latest_val.val_hr10_a = report.hr_a.mean;
      latest_val.val_ndcg10_b = report.ndcg_b.mean;
      latest_val.val_hr10_b = report.hr_b.mean;
      const double score = report.mean_ndcg();
      if (score > result.best_val_ndcg) {
        result.best_val_ndcg = score;
        result.best_epoch = epoch;
        result.best_params = result.model.params().clone();
      }
    } else if (result.best_val_ndcg < 0.0) {
      result.best_params = result.model.params().clone();
      result.best_val_ndcg = 0.0;
      result.best_epoch = epoch;
    }
    LogRecord record{epoch, -1, 0, 0, 0, 0, latest_val.val_ndcg10_a, latest_val.val_hr10_a,
                     latest_val.val_ndcg10_b, latest_val.val_hr10_b, wall_ms()};
    emit(record);
  }
  if (result.best_val_ndcg < 0.0) {
    result.best_params = result.model.params().clone();
    result.best_val_ndcg = 0.0;
  }
  return result;
}

namespace {

/// Fabricate a well-formed episode over a small private vocabulary.
episodes::Episode synthetic_audit_episode(const model::ModelConfig& config,
                                          std::size_t n_support, std::size_t n_query,
                                          std::size_t vocab_a, std::size_t vocab_b,
                                          std::uint64_t seed) {
  rng::Rng r(rng::mix(seed, "audit_episode"));
  const std::size_t t = config.seq_len;
  auto random_seq = [&](std::size_t vocab) {
    const auto len = static_cast<std::size_t>(r.range(1, static_cast<std::int64_t>(t)));
    std::vector<std::size_t> seq(t, 0);
    for (std::size_t i = t - len; i < t; ++i) {
      seq[i] = 1 + static_cast<std::size_t>(r.below(vocab));
    }
    return seq;
  };
  auto random_sample = [&](double label) {
    episodes::Sample s;
    s.x_a = random_seq(vocab_a);
    s.x_b = random_seq(vocab_b);
    s.candidate_domain = r.below(2) == 0 ? data::Domain::A : data::Domain::B;
    const std::size_t local =
        1 + static_cast<std::size_t>(
                r.below(s.candidate_domain == data::Domain::A ? vocab_a : vocab_b));
    s.candidate = s.candidate_domain == data::Domain::A ? local : local + vocab_a;
    s.label = label;
    return s;
  };
  episodes::Episode ep;
  for (std::size_t i = 0; i < n_support; ++i) ep.support.push_back(random_sample(1.0));
  for (std::size_t i = 0; i < n_query; ++i) ep.query.push_back(random_sample(i % 2 == 0 ? 1.0 : 0.0));
  return ep;
}

}  // namespace

AuditReport gradient_audit(const model::ModelConfig& model_config, std::size_t n_support,
                           std::size_t n_query, std::uint64_t seed, const GradTamper& tamper) {
  model::ModelConfig config = model_config;
  config.epsilon_mode = model::EpsilonMode::zero;  // deterministic loss surface
  const std::size_t vocab_a = 6, vocab_b = 6;
  const auto episode =
      synthetic_audit_episode(config, n_support, n_query, vocab_a, vocab_b, seed);

  model::Model net(config, vocab_a, vocab_b, rng::mix(seed, "audit_model"));
  const double lambda = 1e-5;
  const std::uint64_t forward_seed = rng::mix(seed, "audit_forward");

  auto loss_value = [&] {
    const auto trace = net.forward(episode, model::Mode::train, forward_seed);
    const auto rec = mse_loss(trace.predictions, trace.query_labels);
    const auto kl = model::kl_divergence(trace.query, trace.support);
    return total_loss(rec, kl, net.params(), lambda)->scalar();
  };

  // analytic pass
  {
    const auto trace = net.forward(episode, model::Mode::train, forward_seed);
    const auto rec = mse_loss(trace.predictions, trace.query_labels);
    const auto kl = model::kl_divergence(trace.query, trace.support);
    const auto total = total_loss(rec, kl, net.params(), lambda);
    net.params().zero_grad();
    ad::backward(total);
  }

  const double h = 1e-5;
  AuditReport report;
  for (const auto& [name, t] : net.params()) {
    std::vector<double> analytic = t->grad;
    if (tamper) tamper(name, analytic);
    AuditEntry entry{name, 0.0};
    for (std::size_t i = 0; i < t->size(); ++i) {
      auto probe = [&](double step) {
        const double saved = t->data[i];
        t->data[i] = saved + step;
        const double up = loss_value();
        t->data[i] = saved - step;
        const double down = loss_value();
        t->data[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
        return std::abs(analytic[i] - numeric) / denom;
      };
      double err = probe(h);
      // A ReLU kink inside the probe window invalidates the central
      // difference; shrinking the step moves the window off the kink. A
      // wrong gradient keeps disagreeing at every step size.
      if (err > 1e-5) err = std::min(err, std::min(probe(h / 8.0), probe(h / 64.0)));
      entry.max_rel_err = std::max(entry.max_rel_err, err);
      ++report.checked_elements;
    }
    if (entry.max_rel_err > report.max_rel_err) {
      report.max_rel_err = entry.max_rel_err;
      report.worst_param = name;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace cdsrnp::train
