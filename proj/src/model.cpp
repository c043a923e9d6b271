#include "cdsrnp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cdsrnp::model {

using ad::TensorPtr;

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::one_embedding: return "one_embedding";
    default: return "no_adaptive";
  }
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "one_embedding") return Variant::one_embedding;
  if (name == "no_adaptive") return Variant::no_adaptive;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

const char* epsilon_mode_name(EpsilonMode m) {
  return m == EpsilonMode::sample ? "sample" : "zero";
}

EpsilonMode epsilon_mode_from_name(const std::string& name) {
  if (name == "sample") return EpsilonMode::sample;
  if (name == "zero") return EpsilonMode::zero;
  throw std::invalid_argument("unknown epsilon mode '" + name + "'");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || seq_len == 0) {
    throw std::invalid_argument("embedding dimension and sequence length must be positive");
  }
  if (heads == 0 || embed_dim % heads != 0) {
    throw std::invalid_argument("head count must divide the embedding dimension");
  }
}

std::vector<double> ForwardTrace::prediction_values() const {
  std::vector<double> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p->scalar());
  return out;
}

ad::TensorPtr aggregate(const std::vector<TensorPtr>& reps) {
  if (reps.empty()) throw std::invalid_argument("aggregate over empty set");
  std::vector<TensorPtr> stacked;
  stacked.reserve(reps.size());
  const std::size_t d = reps.front()->size();
  for (const auto& r : reps) stacked.push_back(ad::reshape(r, {1, d}));
  return ad::mean(ad::concat(stacked, 0), 0);
}

ad::TensorPtr kl_divergence(const LatentState& q, const LatentState& s) {
  // sum_i [ (ls_s - ls_q) + 0.5 e^{2 ls_q - 2 ls_s}
  //         + 0.5 (mu_q - mu_s)^2 e^{-2 ls_s} ] - D/2
  const auto log_ratio = ad::sub(s.log_sigma, q.log_sigma);
  const auto var_ratio = ad::scale(ad::exp(ad::scale(ad::sub(q.log_sigma, s.log_sigma), 2.0)), 0.5);
  const auto dmu = ad::sub(q.mu, s.mu);
  const auto mean_term =
      ad::scale(ad::mul(ad::mul(dmu, dmu), ad::exp(ad::scale(s.log_sigma, -2.0))), 0.5);
  const auto total = ad::sum_all(ad::add(ad::add(log_ratio, var_ratio), mean_term));
  return ad::add_const(total, -0.5 * static_cast<double>(q.mu->size()));
}

ad::TensorPtr combine_latent(const TensorPtr& mu, const TensorPtr& log_sigma,
                             const TensorPtr& eps) {
  return ad::add(mu, ad::mul(eps, ad::exp(log_sigma)));
}

std::map<std::string, std::vector<std::size_t>> parameter_shapes(const ModelConfig& config,
                                                                 std::size_t vocab_a,
                                                                 std::size_t vocab_b) {
  config.validate();
  const std::size_t d = config.embed_dim;
  const std::size_t h = config.hidden();
  const std::size_t t = config.seq_len;
  std::map<std::string, std::vector<std::size_t>> shapes;

  shapes["embed/item_shared"] = {vocab_a + vocab_b + 1, d};
  shapes["embed/pos_shared"] = {t, d};
  if (config.variant != Variant::one_embedding) {
    shapes["embed/item_a"] = {vocab_a + 1, d};
    shapes["embed/item_b"] = {vocab_b + 1, d};
    shapes["embed/pos_a"] = {t, d};
    shapes["embed/pos_b"] = {t, d};
  }

  auto encoder = [&](const std::string& prefix) {
    shapes[prefix + "/wq"] = {d, d};
    shapes[prefix + "/wk"] = {d, d};
    shapes[prefix + "/wv"] = {d, d};
    shapes[prefix + "/ffn_w1"] = {d, h};
    shapes[prefix + "/ffn_b1"] = {h};
    shapes[prefix + "/ffn_w2"] = {h, d};
    shapes[prefix + "/ffn_b2"] = {d};
  };
  encoder("enc_shared");
  if (config.variant != Variant::one_embedding) encoder("enc_specific");

  auto mlp = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    shapes[prefix + "w1"] = {in, h};
    shapes[prefix + "b1"] = {h};
    shapes[prefix + "w2"] = {h, out};
    shapes[prefix + "b2"] = {out};
  };
  mlp("fuse_a/", 2 * d, d);
  mlp("fuse_b/", 2 * d, d);
  mlp("fuse_all/", 6 * d, d);
  mlp("latent/r_", 2 * d + 1, d);
  shapes["latent/w_r"] = {d, d};
  shapes["latent/w_mu"] = {d, d};
  shapes["latent/w_sigma"] = {d, d};
  if (config.variant != Variant::no_adaptive) {
    shapes["adaptive/wq"] = {d, d};
    shapes["adaptive/wk"] = {d, d};
    shapes["adaptive/wv"] = {d, d};
  }
  mlp("head/d_", 3 * d, d);
  mlp("head/y_", 2 * d, 1);
  return shapes;
}

Model::Model(ModelConfig config, std::size_t vocab_a, std::size_t vocab_b,
             std::uint64_t init_seed)
    : config_(config), vocab_a_(vocab_a), vocab_b_(vocab_b) {
  rng::Rng r(rng::mix(init_seed, "model_init"));
  for (const auto& [name, shape] : parameter_shapes(config_, vocab_a_, vocab_b_)) {
    auto t = params_.create(name, shape);
    if (name.rfind("embed/", 0) == 0) {
      for (auto& v : t->data) v = 0.01 * r.normal();
    } else if (t->rank() == 2) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(t->shape[0]));
      for (auto& v : t->data) v = r.uniform(-bound, bound);
    }
    // rank-1 biases stay zero
  }
  for (const auto& name : pad_pinned_params()) {
    auto& t = params_.at(name);
    std::fill_n(t->data.begin(), config_.embed_dim, 0.0);
  }
  bind_params();
}

Model::Model(ModelConfig config, std::size_t vocab_a, std::size_t vocab_b,
             ad::ParameterStore store)
    : config_(config), vocab_a_(vocab_a), vocab_b_(vocab_b), params_(std::move(store)) {
  const auto expected = parameter_shapes(config_, vocab_a_, vocab_b_);
  if (expected.size() != params_.size()) {
    throw std::runtime_error("checkpoint/vocabulary mismatch: expected " +
                             std::to_string(expected.size()) + " parameters, found " +
                             std::to_string(params_.size()));
  }
  for (const auto& [name, shape] : expected) {
    if (!params_.contains(name)) {
      throw std::runtime_error("checkpoint/vocabulary mismatch: missing parameter '" + name +
                               "'");
    }
    if (params_.at(name)->shape != shape) {
      throw std::runtime_error("checkpoint/vocabulary mismatch: parameter '" + name +
                               "' has shape " + ad::shape_str(params_.at(name)->shape) +
                               ", expected " + ad::shape_str(shape));
    }
  }
  bind_params();
}

void Model::bind_params() {
  item_shared_ = params_.at("embed/item_shared");
  pos_shared_ = params_.at("embed/pos_shared");
  if (config_.variant != Variant::one_embedding) {
    item_a_ = params_.at("embed/item_a");
    item_b_ = params_.at("embed/item_b");
    pos_a_ = params_.at("embed/pos_a");
    pos_b_ = params_.at("embed/pos_b");
  }
  auto bind_encoder = [&](const std::string& prefix) {
    return EncoderParams{params_.at(prefix + "/wq"),     params_.at(prefix + "/wk"),
                         params_.at(prefix + "/wv"),     params_.at(prefix + "/ffn_w1"),
                         params_.at(prefix + "/ffn_b1"), params_.at(prefix + "/ffn_w2"),
                         params_.at(prefix + "/ffn_b2")};
  };
  enc_shared_ = bind_encoder("enc_shared");
  if (config_.variant != Variant::one_embedding) enc_specific_ = bind_encoder("enc_specific");
  auto bind_mlp = [&](const std::string& prefix) {
    return MlpParams{params_.at(prefix + "w1"), params_.at(prefix + "b1"),
                     params_.at(prefix + "w2"), params_.at(prefix + "b2")};
  };
  fuse_a_ = bind_mlp("fuse_a/");
  fuse_b_ = bind_mlp("fuse_b/");
  fuse_all_ = bind_mlp("fuse_all/");
  latent_r_ = bind_mlp("latent/r_");
  head_d_ = bind_mlp("head/d_");
  head_y_ = bind_mlp("head/y_");
  latent_wr_ = params_.at("latent/w_r");
  latent_wmu_ = params_.at("latent/w_mu");
  latent_wsigma_ = params_.at("latent/w_sigma");
  if (config_.variant != Variant::no_adaptive) {
    adapt_wq_ = params_.at("adaptive/wq");
    adapt_wk_ = params_.at("adaptive/wk");
    adapt_wv_ = params_.at("adaptive/wv");
  }
}

std::vector<std::string> Model::pad_pinned_params() const {
  std::vector<std::string> names{"embed/item_shared"};
  if (config_.variant != Variant::one_embedding) {
    names.emplace_back("embed/item_a");
    names.emplace_back("embed/item_b");
  }
  std::sort(names.begin(), names.end());
  return names;
}

void Model::clear_pad_gradients() {
  for (const auto& name : pad_pinned_params()) {
    auto& t = params_.at(name);
    std::fill_n(t->grad.begin(), config_.embed_dim, 0.0);
  }
}

namespace {

std::vector<std::uint8_t> pad_positions(const std::vector<std::size_t>& seq) {
  std::vector<std::uint8_t> pad(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) pad[i] = seq[i] == 0;
  return pad;
}

TensorPtr mlp2_any(const TensorPtr& x, const TensorPtr& w1, const TensorPtr& b1,
                   const TensorPtr& w2, const TensorPtr& b2) {
  if (x->rank() == 2) {
    const auto hidden = ad::relu(ad::bias_add(ad::matmul(x, w1), b1));
    return ad::bias_add(ad::matmul(hidden, w2), b2);
  }
  const auto hidden = ad::relu(ad::add(ad::matmul(x, w1), b1));
  return ad::add(ad::matmul(hidden, w2), b2);
}

/// Scaled-dot attention of q against k/v under a row-wise mask.
TensorPtr attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                    const std::vector<std::uint8_t>& mask, std::size_t head_dim) {
  const auto scores =
      ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(head_dim)));
  return ad::matmul(ad::masked_softmax(scores, mask), v);
}

/// Attention with optional multi-head column splitting. q may be rank 1
/// (a single query vector) or rank 2.
TensorPtr multi_head_attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                               const std::vector<std::uint8_t>& mask, std::size_t heads) {
  const std::size_t d = q->shape.back();
  const std::size_t head_dim = d / heads;
  if (heads == 1) return attention(q, k, v, mask, head_dim);
  const std::size_t q_axis = q->rank() - 1;
  std::vector<TensorPtr> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * head_dim;
    outs.push_back(attention(ad::slice(q, q_axis, off, head_dim),
                             ad::slice(k, 1, off, head_dim), ad::slice(v, 1, off, head_dim),
                             mask, head_dim));
  }
  return ad::concat(outs, q_axis);
}

}  // namespace

Model::SampleEmbeddings Model::embed_sample(const episodes::Sample& sample) const {
  const std::size_t t = config_.seq_len;
  if (sample.x_a.size() != t || sample.x_b.size() != t) {
    throw std::invalid_argument("sample sequences must have length " + std::to_string(t));
  }
  std::vector<std::size_t> shared_a(t), shared_b(t);
  for (std::size_t i = 0; i < t; ++i) {
    shared_a[i] = sample.x_a[i] == 0 ? 0 : sample.x_a[i];
    shared_b[i] = sample.x_b[i] == 0 ? 0 : sample.x_b[i] + vocab_a_;
  }
  SampleEmbeddings e;
  e.a_shared = ad::add(ad::rows(item_shared_, shared_a), pos_shared_);
  e.b_shared = ad::add(ad::rows(item_shared_, shared_b), pos_shared_);
  if (config_.variant == Variant::one_embedding) {
    e.a_specific = e.a_shared;
    e.b_specific = e.b_shared;
  } else {
    e.a_specific = ad::add(ad::rows(item_a_, sample.x_a), pos_a_);
    e.b_specific = ad::add(ad::rows(item_b_, sample.x_b), pos_b_);
  }
  return e;
}

ad::TensorPtr Model::encode_sequence(const TensorPtr& embedded,
                                     const std::vector<std::uint8_t>& pad_mask,
                                     const EncoderParams& encoder) const {
  const std::size_t t = config_.seq_len;
  if (embedded->rank() != 2 || embedded->shape[0] != t || pad_mask.size() != t) {
    throw std::invalid_argument("encode_sequence: expected " + std::to_string(t) +
                                " positions, got " + ad::shape_str(embedded->shape));
  }
  // position u is attendable from position p iff u <= p and u is not pad
  std::vector<std::uint8_t> mask(t * t, 0);
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t u = 0; u <= p; ++u) mask[p * t + u] = pad_mask[u] ? 0 : 1;
  }
  const auto q = ad::matmul(embedded, encoder.wq);
  const auto k = ad::matmul(embedded, encoder.wk);
  const auto v = ad::matmul(embedded, encoder.wv);
  const auto attended = ad::add(embedded, multi_head_attention(q, k, v, mask, config_.heads));
  const auto ffn =
      mlp2_any(attended, encoder.ffn_w1, encoder.ffn_b1, encoder.ffn_w2, encoder.ffn_b2);
  return ad::add(attended, ffn);
}

ad::TensorPtr Model::fuse(const TensorPtr& a_specific, const TensorPtr& a_shared,
                          const TensorPtr& b_specific, const TensorPtr& b_shared) const {
  const auto fa = mlp2_any(ad::concat({a_specific, a_shared}, 1), fuse_a_.w1, fuse_a_.b1,
                           fuse_a_.w2, fuse_a_.b2);
  const auto fb = mlp2_any(ad::concat({b_specific, b_shared}, 1), fuse_b_.w1, fuse_b_.b1,
                           fuse_b_.w2, fuse_b_.b2);
  const auto all = ad::concat({fa, fb, a_specific, a_shared, b_specific, b_shared}, 1);
  return mlp2_any(all, fuse_all_.w1, fuse_all_.b1, fuse_all_.w2, fuse_all_.b2);
}

ad::TensorPtr Model::pool(const TensorPtr& fused) {
  return ad::mean(fused, 0);
}

ad::TensorPtr Model::sequence_repr(const episodes::Sample& sample) const {
  const auto e = embed_sample(sample);
  const auto pad_a = pad_positions(sample.x_a);
  const auto pad_b = pad_positions(sample.x_b);
  const bool collapsed = config_.variant == Variant::one_embedding;
  const auto a_shared = encode_sequence(e.a_shared, pad_a, enc_shared_);
  const auto b_shared = encode_sequence(e.b_shared, pad_b, enc_shared_);
  const auto a_specific = collapsed ? a_shared : encode_sequence(e.a_specific, pad_a, enc_specific_);
  const auto b_specific = collapsed ? b_shared : encode_sequence(e.b_specific, pad_b, enc_specific_);
  return pool(fuse(a_specific, a_shared, b_specific, b_shared));
}

ad::TensorPtr Model::candidate_embedding(std::size_t candidate_global) const {
  if (candidate_global == 0 || candidate_global > vocab_a_ + vocab_b_) {
    throw std::out_of_range("candidate index " + std::to_string(candidate_global) +
                            " outside the shared vocabulary");
  }
  const std::size_t idx[1] = {candidate_global};
  return ad::reshape(ad::rows(item_shared_, idx), {config_.embed_dim});
}

ad::TensorPtr Model::encode_sample_latent(const TensorPtr& f, const TensorPtr& candidate,
                                          double label) const {
  const auto y = ad::make_scalar(label);
  const auto joined = ad::concat({f, candidate, y}, 0);
  return mlp2_any(joined, latent_r_.w1, latent_r_.b1, latent_r_.w2, latent_r_.b2);
}

LatentState Model::reparameterize(const TensorPtr& r, rng::Rng& rng) const {
  const auto hidden = ad::relu(ad::matmul(r, latent_wr_));
  LatentState state;
  state.mu = ad::matmul(hidden, latent_wmu_);
  state.log_sigma = ad::matmul(hidden, latent_wsigma_);
  auto eps = ad::make_tensor({config_.embed_dim});
  if (config_.epsilon_mode == EpsilonMode::sample) {
    for (auto& v : eps->data) v = rng.normal();
  }
  state.z = combine_latent(state.mu, state.log_sigma, eps);
  return state;
}

ad::TensorPtr Model::adaptive_attention(const TensorPtr& f_query,
                                        const std::vector<TensorPtr>& support_f) const {
  if (support_f.empty()) throw std::invalid_argument("adaptive attention needs support");
  if (config_.variant == Variant::no_adaptive) {
    throw std::logic_error("adaptive attention is disabled in this variant");
  }
  std::vector<TensorPtr> stacked;
  stacked.reserve(support_f.size());
  for (const auto& f : support_f) stacked.push_back(ad::reshape(f, {1, config_.embed_dim}));
  const auto support = ad::concat(stacked, 0);
  const auto q = ad::matmul(f_query, adapt_wq_);
  const auto k = ad::matmul(support, adapt_wk_);
  const auto v = ad::matmul(support, adapt_wv_);
  const std::vector<std::uint8_t> mask(support_f.size(), 1);
  return multi_head_attention(q, k, v, mask, config_.heads);
}

ad::TensorPtr Model::predict(const TensorPtr& f, const TensorPtr& f_s, const TensorPtr& z,
                             const TensorPtr& candidate) const {
  const auto d = mlp2_any(ad::concat({f, f_s, z}, 0), head_d_.w1, head_d_.b1, head_d_.w2,
                          head_d_.b2);
  const auto logit =
      mlp2_any(ad::concat({d, candidate}, 0), head_y_.w1, head_y_.b1, head_y_.w2, head_y_.b2);
  return ad::sigmoid(logit);
}

ForwardTrace Model::forward(const episodes::Episode& episode, Mode mode,
                            std::uint64_t seed) const {
  if (episode.support.empty() || episode.query.empty()) {
    throw std::invalid_argument("episode must have support and query samples");
  }
  rng::Rng forward_rng(rng::mix(seed, "forward"));
  ForwardTrace trace;

  // Distinct query samples for one user share histories; reuse the
  // sequence path per unique (x_a, x_b) pair. Shared nodes keep gradient
  // flow identical to recomputation.
  std::map<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>, TensorPtr> f_memo;
  auto repr = [&](const episodes::Sample& s) {
    const auto key = std::make_pair(s.x_a, s.x_b);
    auto it = f_memo.find(key);
    if (it != f_memo.end()) return it->second;
    auto f = sequence_repr(s);
    f_memo.emplace(key, f);
    return f;
  };

  std::vector<TensorPtr> support_r;
  for (const auto& s : episode.support) {
    const auto f = repr(s);
    trace.support_f.push_back(f);
    support_r.push_back(encode_sample_latent(f, candidate_embedding(s.candidate), s.label));
  }
  trace.support = reparameterize(aggregate(support_r), forward_rng);

  for (const auto& s : episode.query) trace.query_f.push_back(repr(s));
  if (mode == Mode::train) {
    std::vector<TensorPtr> query_r;
    for (std::size_t i = 0; i < episode.query.size(); ++i) {
      query_r.push_back(encode_sample_latent(
          trace.query_f[i], candidate_embedding(episode.query[i].candidate),
          episode.query[i].label));
    }
    trace.query = reparameterize(aggregate(query_r), forward_rng);
  }
  const TensorPtr z = mode == Mode::train ? trace.query.z : trace.support.z;

  std::map<const ad::Tensor*, std::pair<TensorPtr, TensorPtr>> head_memo;  // f -> (f_s, d)
  TensorPtr zero_fs;
  if (config_.variant == Variant::no_adaptive) zero_fs = ad::make_tensor({config_.embed_dim});
  for (std::size_t i = 0; i < episode.query.size(); ++i) {
    const auto& f = trace.query_f[i];
    auto it = head_memo.find(f.get());
    if (it == head_memo.end()) {
      const auto f_s = config_.variant == Variant::no_adaptive
                           ? zero_fs
                           : adaptive_attention(f, trace.support_f);
      const auto d = mlp2_any(ad::concat({f, f_s, z}, 0), head_d_.w1, head_d_.b1, head_d_.w2,
                              head_d_.b2);
      it = head_memo.emplace(f.get(), std::make_pair(f_s, d)).first;
    }
    trace.query_fs.push_back(it->second.first);
    const auto logit = mlp2_any(ad::concat({it->second.second,
                                            candidate_embedding(episode.query[i].candidate)},
                                           0),
                                head_y_.w1, head_y_.b1, head_y_.w2, head_y_.b2);
    trace.predictions.push_back(ad::sigmoid(logit));
    if (mode == Mode::train) trace.query_labels.push_back(episode.query[i].label);
  }
  return trace;
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'D', 'S', 'R', 'N', 'P', 'C', '1'};

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint '" + path + "' for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::ostringstream header;
  const auto& c = model.config();
  header << "embedding_dim=" << c.embed_dim << "\n"
         << "seq_len=" << c.seq_len << "\n"
         << "mlp_hidden=" << c.mlp_hidden << "\n"
         << "heads=" << c.heads << "\n"
         << "epsilon_mode=" << epsilon_mode_name(c.epsilon_mode) << "\n"
         << "variant=" << variant_name(c.variant) << "\n"
         << "vocab_a=" << model.vocab_a() << "\n"
         << "vocab_b=" << model.vocab_b() << "\n";
  const std::string h = header.str();
  const std::uint64_t len = h.size();
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(len >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  model.params().save(out);
}

namespace {

CheckpointMeta parse_header(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw std::runtime_error("'" + path + "' is not a checkpoint file");
  }
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint '" + path + "' truncated");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint '" + path + "' truncated");

  CheckpointMeta meta;
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "embedding_dim") meta.config.embed_dim = std::stoull(value);
    else if (key == "seq_len") meta.config.seq_len = std::stoull(value);
    else if (key == "mlp_hidden") meta.config.mlp_hidden = std::stoull(value);
    else if (key == "heads") meta.config.heads = std::stoull(value);
    else if (key == "epsilon_mode") meta.config.epsilon_mode = epsilon_mode_from_name(value);
    else if (key == "variant") meta.config.variant = variant_from_name(value);
    else if (key == "vocab_a") meta.vocab_a = std::stoull(value);
    else if (key == "vocab_b") meta.vocab_b = std::stoull(value);
    else throw std::runtime_error("checkpoint header has unknown key '" + key + "'");
  }
  return meta;
}

}  // namespace

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  const CheckpointMeta meta = parse_header(in, path);
  auto store = ad::ParameterStore::load(in);
  return Model(meta.config, meta.vocab_a, meta.vocab_b, std::move(store));
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  return parse_header(in, path);
}

}  // namespace cdsrnp::model
