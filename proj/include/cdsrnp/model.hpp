#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdsrnp/episode.hpp"
#include "cdsrnp/param_store.hpp"
#include "cdsrnp/rng.hpp"

namespace cdsrnp::model {

enum class EpsilonMode : std::uint8_t { sample, zero };
enum class Mode : std::uint8_t { train, inference };

// Structural ablations. all_user_support is an episode-construction
// change and lives in EpisodeOptions instead.
enum class Variant : std::uint8_t { full, one_embedding, no_adaptive };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
const char* epsilon_mode_name(EpsilonMode m);
EpsilonMode epsilon_mode_from_name(const std::string& name);

struct ModelConfig {
  std::size_t embed_dim = 32;  // D
  std::size_t seq_len = 15;    // T
  std::size_t mlp_hidden = 0;  // 0 uses embed_dim
  std::size_t heads = 1;
  EpsilonMode epsilon_mode = EpsilonMode::sample;
  Variant variant = Variant::full;

  std::size_t hidden() const { return mlp_hidden == 0 ? embed_dim : mlp_hidden; }
  void validate() const;
};

/// Gaussian latent produced by the reparameterization path.
struct LatentState {
  ad::TensorPtr mu, log_sigma, z;
};

struct ForwardTrace {
  std::vector<ad::TensorPtr> support_f, query_f;  // sequence representations
  std::vector<ad::TensorPtr> query_fs;            // adaptive-layer outputs, per query
  LatentState support;
  LatentState query;                   // filled in train mode only
  std::vector<ad::TensorPtr> predictions;  // scalar per query sample
  std::vector<double> query_labels;        // copied for loss assembly (train)

  std::vector<double> prediction_values() const;
};

/// Mean of same-shape vectors; the NP set aggregation.
ad::TensorPtr aggregate(const std::vector<ad::TensorPtr>& reps);

/// Closed-form KL(N(mu_q, sigma_q^2) || N(mu_s, sigma_s^2)) summed over
/// dimensions; differentiable w.r.t. both states.
ad::TensorPtr kl_divergence(const LatentState& q, const LatentState& s);

/// z = mu + eps * exp(log_sigma), elementwise.
ad::TensorPtr combine_latent(const ad::TensorPtr& mu, const ad::TensorPtr& log_sigma,
                             const ad::TensorPtr& eps);

class Model {
 public:
  /// Fresh model with seeded initialization.
  Model(ModelConfig config, std::size_t vocab_a, std::size_t vocab_b, std::uint64_t init_seed);

  /// Rebind to existing parameters (checkpoint load); shapes are checked.
  Model(ModelConfig config, std::size_t vocab_a, std::size_t vocab_b, ad::ParameterStore store);

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_a() const { return vocab_a_; }
  std::size_t vocab_b() const { return vocab_b_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  /// Parameters whose leading row is the pinned pad embedding.
  std::vector<std::string> pad_pinned_params() const;

  /// Zero the gradient of every pinned pad row (row 0 of item tables).
  void clear_pad_gradients();

  ForwardTrace forward(const episodes::Episode& episode, Mode mode, std::uint64_t seed) const;

  // --- individual stages, exposed for direct testing ---

  struct SampleEmbeddings {
    ad::TensorPtr a_specific, a_shared, b_specific, b_shared;  // each T x D
  };
  SampleEmbeddings embed_sample(const episodes::Sample& sample) const;

  struct EncoderParams {
    ad::TensorPtr wq, wk, wv, ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  };
  const EncoderParams& encoder_specific() const { return enc_specific_; }
  const EncoderParams& encoder_shared() const { return enc_shared_; }

  /// One masked self-attention block: causal + pad masking, then a
  /// position-wise feed-forward, both with residual connections.
  ad::TensorPtr encode_sequence(const ad::TensorPtr& embedded,
                                const std::vector<std::uint8_t>& pad_mask,
                                const EncoderParams& encoder) const;

  ad::TensorPtr fuse(const ad::TensorPtr& a_specific, const ad::TensorPtr& a_shared,
                     const ad::TensorPtr& b_specific, const ad::TensorPtr& b_shared) const;

  static ad::TensorPtr pool(const ad::TensorPtr& fused);

  /// Full sequence path for one sample: embeddings -> encoders -> fusion
  /// -> mean pooling.
  ad::TensorPtr sequence_repr(const episodes::Sample& sample) const;

  /// Shared-table embedding of a candidate item.
  ad::TensorPtr candidate_embedding(std::size_t candidate_global) const;

  /// NP sample representation r = MLP([f (+) v_cand (+) y]).
  ad::TensorPtr encode_sample_latent(const ad::TensorPtr& f, const ad::TensorPtr& candidate,
                                     double label) const;

  LatentState reparameterize(const ad::TensorPtr& r, rng::Rng& rng) const;

  ad::TensorPtr adaptive_attention(const ad::TensorPtr& f_query,
                                   const std::vector<ad::TensorPtr>& support_f) const;

  ad::TensorPtr predict(const ad::TensorPtr& f, const ad::TensorPtr& f_s, const ad::TensorPtr& z,
                        const ad::TensorPtr& candidate) const;

 private:
  void bind_params();

  ModelConfig config_;
  std::size_t vocab_a_ = 0, vocab_b_ = 0;
  ad::ParameterStore params_;

  ad::TensorPtr item_a_, item_b_, item_shared_;
  ad::TensorPtr pos_a_, pos_b_, pos_shared_;
  EncoderParams enc_specific_, enc_shared_;
  struct MlpParams {
    ad::TensorPtr w1, b1, w2, b2;
  };
  MlpParams fuse_a_, fuse_b_, fuse_all_, latent_r_, head_d_, head_y_;
  ad::TensorPtr latent_wr_, latent_wmu_, latent_wsigma_;
  ad::TensorPtr adapt_wq_, adapt_wk_, adapt_wv_;
};

/// Expected parameter shapes for a configuration; checkpoint loading and
/// the fresh-init path share this single source of truth.
std::map<std::string, std::vector<std::size_t>> parameter_shapes(const ModelConfig& config,
                                                                 std::size_t vocab_a,
                                                                 std::size_t vocab_b);

struct CheckpointMeta {
  ModelConfig config;
  std::size_t vocab_a = 0, vocab_b = 0;
};

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace cdsrnp::model
