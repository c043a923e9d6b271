// Command-line driver: data preparation, synthetic generation, training,
// evaluation, ablations, and the gradient audit.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdsrnp/config.hpp"
#include "cdsrnp/data.hpp"
#include "cdsrnp/episode.hpp"
#include "cdsrnp/eval.hpp"
#include "cdsrnp/model.hpp"
#include "cdsrnp/rng.hpp"
#include "cdsrnp/train.hpp"

namespace fs = std::filesystem;
using cdsrnp::config::Config;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;  // -1: keep config value
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
  cmd->add_option("--out", args.out_dir, "run directory (default: runs/<timestamp>_<seed>)");
  cmd->add_option("--seed", args.seed, "random seed (overrides the config key)");
}

Config resolve_config(const CommonArgs& args) {
  Config cfg = Config::defaults();
  if (!args.config_path.empty()) cfg.load_file(args.config_path);
  for (const auto& assignment : args.overrides) cfg.apply_override(assignment);
  if (args.seed >= 0) cfg.set("seed", std::to_string(args.seed));
  return cfg;
}

fs::path make_run_dir(const CommonArgs& args, const Config& cfg) {
  fs::path dir;
  if (!args.out_dir.empty()) {
    dir = args.out_dir;
  } else {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
    dir = fs::path("runs") / (std::string(stamp) + "_" + cfg.str("seed"));
  }
  fs::create_directories(dir);
  cfg.save_file((dir / "resolved.cfg").string());
  return dir;
}

cdsrnp::data::SynthConfig synth_config_from(const Config& c) {
  cdsrnp::data::SynthConfig s;
  s.users = c.uinteger("users");
  s.items_a = c.uinteger("items_a");
  s.items_b = c.uinteger("items_b");
  s.overlap_frac = c.number("overlap_frac");
  s.latent_dim = c.uinteger("latent_dim");
  s.min_len = c.uinteger("min_len");
  s.max_len = c.uinteger("max_len");
  s.seed = c.uinteger("seed");
  return s;
}

struct VariantSpec {
  cdsrnp::model::Variant model = cdsrnp::model::Variant::full;
  bool all_user_support = false;
};

VariantSpec parse_variant(const std::string& name) {
  if (name == "all_user_support") return {cdsrnp::model::Variant::full, true};
  return {cdsrnp::model::variant_from_name(name), false};
}

cdsrnp::model::ModelConfig model_config_from(const Config& c) {
  cdsrnp::model::ModelConfig m;
  m.embed_dim = c.uinteger("embedding_dim");
  m.seq_len = c.uinteger("seq_len");
  m.mlp_hidden = c.uinteger("mlp_hidden");
  m.heads = c.uinteger("heads");
  m.epsilon_mode = cdsrnp::model::epsilon_mode_from_name(c.str("epsilon_mode"));
  m.variant = parse_variant(c.str("variant")).model;
  m.validate();
  return m;
}

cdsrnp::train::TrainConfig train_config_from(const Config& c) {
  cdsrnp::train::TrainConfig t;
  t.learning_rate = c.number("learning_rate");
  t.lambda_reg = c.number("lambda_reg");
  t.reg_mode = cdsrnp::train::reg_mode_from_name(c.str("reg_mode"));
  t.epochs = c.uinteger("epochs");
  t.episodes_per_epoch = c.uinteger("episodes_per_epoch");
  t.n_support = c.uinteger("support_size");
  t.n_query = c.uinteger("query_size");
  t.seed = c.uinteger("seed");
  t.adam_beta1 = c.number("adam_beta1");
  t.adam_beta2 = c.number("adam_beta2");
  t.adam_eps = c.number("adam_eps");
  t.all_user_support = parse_variant(c.str("variant")).all_user_support;
  t.n_negatives_val = c.uinteger("n_negatives_val");
  t.val_max_users = c.uinteger("val_max_users");
  t.validate();
  return t;
}

cdsrnp::data::DatasetSplit load_split(const Config& c) {
  const std::string input = c.str("input");
  if (input.empty()) {
    throw std::runtime_error("config key 'input' must point to an interaction log");
  }
  const auto interactions = cdsrnp::data::load_interactions(input);
  cdsrnp::data::SplitRatios ratios{c.number("ratio_train"), c.number("ratio_val"),
                                   c.number("ratio_test")};
  return cdsrnp::data::prepare_split(interactions, c.number("k_u"), c.uinteger("seed"),
                                     c.uinteger("min_user"), c.uinteger("min_item"), ratios);
}

void write_interactions(const std::vector<cdsrnp::data::Interaction>& interactions,
                        const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "# user\titem\tdomain\ttimestamp\n";
  for (const auto& ev : interactions) {
    out << ev.user << '\t' << ev.item << '\t' << cdsrnp::data::domain_letter(ev.domain) << '\t'
        << ev.timestamp << '\n';
  }
}

int run_synth(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const auto dir = make_run_dir(args, cfg);
  const auto synth = cdsrnp::data::synth_generate(synth_config_from(cfg));
  const auto path = dir / "interactions.tsv";
  write_interactions(synth.interactions, path);
  std::cout << "wrote " << synth.interactions.size() << " interactions for "
            << cfg.str("users") << " users to " << path.string() << "\n";
  return 0;
}

int run_prepare(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const auto dir = make_run_dir(args, cfg);
  const auto split = load_split(cfg);
  const auto manifest = dir / "split_manifest.tsv";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write '" + manifest.string() + "'");
  auto dump = [&](const std::vector<cdsrnp::data::TargetEntry>& entries, cdsrnp::data::Split s) {
    for (const auto& e : entries) {
      const auto& rec = split.record_view(s)[e.user_index];
      out << rec.user << '\t' << split.vocabs.of(e.domain).item(e.item) << '\t'
          << cdsrnp::data::domain_letter(e.domain) << '\t' << cdsrnp::data::split_name(s)
          << '\n';
    }
  };
  dump(split.train, cdsrnp::data::Split::train);
  dump(split.validation, cdsrnp::data::Split::validation);
  dump(split.test, cdsrnp::data::Split::test);

  std::size_t overlapped = 0;
  for (const auto& rec : split.records) overlapped += rec.overlapped ? 1 : 0;
  std::cout << "users=" << split.records.size() << " overlapped=" << overlapped
            << " vocab_a=" << split.vocabs.a.size() << " vocab_b=" << split.vocabs.b.size()
            << " train=" << split.train.size() << " validation=" << split.validation.size()
            << " test=" << split.test.size() << "\n"
            << "manifest: " << manifest.string() << "\n";
  return 0;
}

int run_train(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const auto dir = make_run_dir(args, cfg);
  const auto split = load_split(cfg);
  const auto model_cfg = model_config_from(cfg);
  const auto train_cfg = train_config_from(cfg);

  std::ofstream log(dir / "metrics.log");
  if (!log) throw std::runtime_error("cannot write metrics log");
  auto result = cdsrnp::train::train_loop(split, model_cfg, train_cfg, &log);

  cdsrnp::model::save_checkpoint(result.model, (dir / "final.ckpt").string());
  cdsrnp::model::Model best(model_cfg, split.vocabs.a.size(), split.vocabs.b.size(),
                            std::move(result.best_params));
  cdsrnp::model::save_checkpoint(best, (dir / "best.ckpt").string());
  std::cout << "trained " << train_cfg.epochs << " epochs; best validation NDCG@10 "
            << result.best_val_ndcg << " at epoch " << result.best_epoch << "\n"
            << "checkpoints: " << (dir / "final.ckpt").string() << ", "
            << (dir / "best.ckpt").string() << "\n";
  return 0;
}

std::vector<std::uint64_t> eval_seeds_from(const Config& cfg) {
  const std::size_t n = cfg.uinteger("eval_seeds");
  if (n == 0) throw std::runtime_error("eval_seeds must be positive");
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n; ++i) {
    seeds.push_back(cdsrnp::rng::mix(cdsrnp::rng::mix(cfg.uinteger("seed"), "eval"), i));
  }
  return seeds;
}

int run_eval(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const auto dir = make_run_dir(args, cfg);
  const std::string ckpt = cfg.str("checkpoint");
  if (ckpt.empty()) throw std::runtime_error("config key 'checkpoint' must be set for eval");
  const auto split = load_split(cfg);
  const auto net = cdsrnp::model::load_checkpoint(ckpt);

  cdsrnp::eval::EvalOptions options{cfg.uinteger("n_negatives_test"),
                                    cfg.uinteger("support_size"), 0,
                                    parse_variant(cfg.str("variant")).all_user_support};
  const auto seeds = eval_seeds_from(cfg);
  const auto report = cdsrnp::eval::evaluate(net, split, cdsrnp::data::Split::test, options,
                                             seeds);
  report.save_file((dir / "report.txt").string());
  const auto baseline = cdsrnp::eval::random_baseline(
      split, cdsrnp::data::Split::test, options.n_negatives,
      cdsrnp::rng::mix(cfg.uinteger("seed"), "baseline"));
  baseline.save_file((dir / "random_baseline.txt").string());

  std::cout << "model  NDCG@10 A=" << report.ndcg_a.mean << " B=" << report.ndcg_b.mean
            << "  HR@10 A=" << report.hr_a.mean << " B=" << report.hr_b.mean << "\n"
            << "random NDCG@10 A=" << baseline.ndcg_a.mean << " B=" << baseline.ndcg_b.mean
            << "  HR@10 A=" << baseline.hr_a.mean << " B=" << baseline.hr_b.mean << "\n"
            << "reports: " << (dir / "report.txt").string() << ", "
            << (dir / "random_baseline.txt").string() << "\n";
  return 0;
}

int run_ablate(const CommonArgs& args) {
  const Config cfg = resolve_config(args);
  const auto dir = make_run_dir(args, cfg);
  const auto split = load_split(cfg);

  std::vector<std::string> variants{"full"};
  {
    std::stringstream list(cfg.str("variants"));
    std::string item;
    while (std::getline(list, item, ',')) {
      if (!item.empty() && std::find(variants.begin(), variants.end(), item) == variants.end()) {
        variants.push_back(item);
      }
    }
  }
  const std::size_t n_seeds = cfg.uinteger("ablate_seeds");
  const std::uint64_t base_seed = cfg.uinteger("seed");

  std::map<std::string, std::vector<double>> ndcg_by_variant;
  for (const auto& name : variants) {
    const VariantSpec spec = parse_variant(name);  // validates the name
    auto model_cfg = model_config_from(cfg);
    model_cfg.variant = spec.model;
    auto train_cfg = train_config_from(cfg);
    train_cfg.all_user_support = spec.all_user_support;

    std::vector<cdsrnp::eval::MetricsReport> reports;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      train_cfg.seed = cdsrnp::rng::mix(cdsrnp::rng::mix(base_seed, "ablate"), i);
      auto result = cdsrnp::train::train_loop(split, model_cfg, train_cfg, nullptr);
      cdsrnp::eval::EvalOptions options{cfg.uinteger("n_negatives_test"), train_cfg.n_support,
                                        0, spec.all_user_support};
      const std::uint64_t eval_seed[1] = {train_cfg.seed};
      reports.push_back(cdsrnp::eval::evaluate(result.model, split, cdsrnp::data::Split::test,
                                               options, eval_seed));
      ndcg_by_variant[name].push_back(reports.back().mean_ndcg());
    }
    std::ofstream out(dir / ("ablate_" + name + ".txt"));
    for (std::size_t i = 0; i < reports.size(); ++i) {
      out << "# seed_index=" << i << "\n" << reports[i].serialize();
    }
    std::cout << name << ": mean NDCG@10 over " << n_seeds << " seeds = ";
    double mean = 0;
    for (double v : ndcg_by_variant[name]) mean += v;
    std::cout << mean / static_cast<double>(n_seeds) << "\n";
  }
  for (const auto& name : variants) {
    if (name == "full") continue;
    std::size_t wins = 0;
    for (std::size_t i = 0; i < n_seeds; ++i) {
      if (ndcg_by_variant["full"][i] > ndcg_by_variant[name][i]) ++wins;
    }
    std::cout << "full beats " << name << " in " << wins << "/" << n_seeds << " seeds\n";
  }
  return 0;
}

int run_audit(const CommonArgs& args) {
  CommonArgs tiny = args;
  // tiny defaults; explicit --set overrides still win
  tiny.overrides.insert(tiny.overrides.begin(),
                        {"embedding_dim=8", "seq_len=5", "support_size=4", "query_size=4"});
  const Config cfg = resolve_config(tiny);
  const auto dir = make_run_dir(tiny, cfg);
  auto model_cfg = model_config_from(cfg);
  const auto report = cdsrnp::train::gradient_audit(model_cfg, cfg.uinteger("support_size"),
                                                    cfg.uinteger("query_size"),
                                                    cfg.uinteger("seed"));
  std::ofstream out(dir / "audit.txt");
  for (const auto& e : report.entries) {
    out << e.name << "\tmax_rel_err=" << e.max_rel_err << "\n";
  }
  std::cout << "checked " << report.checked_elements << " gradient entries across "
            << report.entries.size() << " parameters\n"
            << "max relative error " << report.max_rel_err << " (parameter "
            << report.worst_param << ")\n";
  const bool ok = report.max_rel_err < 1e-4;
  std::cout << (ok ? "gradient audit PASSED" : "gradient audit FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CDSRNP: cross-domain sequential recommendation via neural processes"};
  app.require_subcommand(1);

  CommonArgs synth_args, prepare_args, train_args, eval_args, ablate_args, audit_args;
  attach_common(app.add_subcommand("synth", "generate a synthetic interaction log"), synth_args);
  attach_common(app.add_subcommand("prepare", "ingest, filter, and split an interaction log"),
                prepare_args);
  attach_common(app.add_subcommand("train", "train a model on a prepared dataset"), train_args);
  attach_common(app.add_subcommand("eval", "evaluate a checkpoint with the ranking protocol"),
                eval_args);
  attach_common(app.add_subcommand("ablate", "train and evaluate model variants side by side"),
                ablate_args);
  attach_common(app.add_subcommand("audit", "finite-difference gradient audit"), audit_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth_args);
    if (app.got_subcommand("prepare")) return run_prepare(prepare_args);
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("eval")) return run_eval(eval_args);
    if (app.got_subcommand("ablate")) return run_ablate(ablate_args);
    if (app.got_subcommand("audit")) return run_audit(audit_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
