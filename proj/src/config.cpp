#include "cdsrnp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdsrnp::config {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      // shared
      {"seed", "1"},
      // data ingestion and split protocol
      {"input", ""},
      {"checkpoint", ""},
      {"k_u", "0"},
      {"min_user", "10"},
      {"min_item", "5"},
      {"ratio_train", "0.8"},
      {"ratio_val", "0.1"},
      {"ratio_test", "0.1"},
      // synthetic data generator
      {"users", "2000"},
      {"items_a", "200"},
      {"items_b", "200"},
      {"overlap_frac", "0.5"},
      {"latent_dim", "4"},
      {"min_len", "10"},
      {"max_len", "20"},
      // model
      {"embedding_dim", "32"},
      {"seq_len", "15"},
      {"mlp_hidden", "0"},
      {"heads", "1"},
      {"epsilon_mode", "sample"},
      {"variant", "full"},
      // training
      {"learning_rate", "0.001"},
      {"lambda_reg", "1e-05"},
      {"reg_mode", "squared"},
      {"epochs", "10"},
      {"episodes_per_epoch", "0"},
      {"support_size", "10"},
      {"query_size", "20"},
      {"adam_beta1", "0.9"},
      {"adam_beta2", "0.999"},
      {"adam_eps", "1e-08"},
      // evaluation
      {"n_negatives_val", "199"},
      {"n_negatives_test", "999"},
      {"eval_seeds", "5"},
      {"val_max_users", "200"},
      // ablation driver
      {"variants", "one_embedding,no_adaptive,all_user_support"},
      {"ablate_seeds", "5"},
  };
  return defaults;
}

}  // namespace

Config Config::defaults() {
  Config c;
  c.values_ = default_values();
  return c;
}

bool Config::is_known_key(const std::string& key) {
  return default_values().count(key) != 0;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    const auto vfirst = value.find_first_not_of(" \t");
    value = vfirst == std::string::npos ? "" : value.substr(vfirst);
    try {
      set(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t Config::integer(const std::string& key) const {
  const std::string& v = str(key);
  std::size_t pos = 0;
  const std::int64_t out = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config key '" + key + "' = '" + v +
                                                   "' is not an integer");
  return out;
}

std::uint64_t Config::uinteger(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw std::invalid_argument("config key '" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

double Config::number(const std::string& key) const {
  const std::string& v = str(key);
  std::size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config key '" + key + "' = '" + v +
                                                   "' is not a number");
  return out;
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
  return out.str();
}

void Config::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
  out << serialize();
}

}  // namespace cdsrnp::config
