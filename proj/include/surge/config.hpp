#pragma once

#include "surge/csv.hpp"
#include "surge/timegan.hpp"

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace surge {

struct TrainConfig {
  std::size_t n_layers = 4;
  std::size_t hidden = 256;
  std::size_t epochs = 3000;      // joint phase
  std::size_t ae_epochs = 0;      // 0: epochs / 2
  std::size_t sup_epochs = 0;     // 0: epochs / 2
  std::size_t batch_size = 10;
  double lr = 1e-3;
  double lambda_sup = 10.0;
  double lambda_moment = 10.0;
  double lambda_embed_sup = 0.1;
  double disc_threshold = 0.15;
  std::size_t gen_steps_per_disc_check = 2;
  std::uint64_t seed = 42;
  SupervisorSpace supervisor_space = SupervisorSpace::latent;
  std::size_t rows = 0;           // 0: derived from the series length
  bool fit_on_train = false;
  bool truncate = false;
  std::size_t noise_draws = 1;

  std::size_t autoencoder_epochs() const { return ae_epochs ? ae_epochs : epochs / 2; }
  std::size_t supervisor_epochs() const { return sup_epochs ? sup_epochs : epochs / 2; }

  void validate() const {
    if (n_layers < 2) throw DataError("config: n_layers must be >= 2");
    if (hidden == 0 || batch_size == 0 || gen_steps_per_disc_check == 0 || noise_draws == 0) {
      throw DataError("config: hidden, batch_size, gen_steps_per_disc_check and noise_draws must be positive");
    }
    if (!(lr > 0.0)) throw DataError("config: lr must be positive");
    if (!(lambda_sup >= 0.0 && lambda_moment >= 0.0 && lambda_embed_sup >= 0.0)) {
      throw DataError("config: loss weights must be non-negative");
    }
    if (!(disc_threshold >= 0.0)) throw DataError("config: disc_threshold must be >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline const char* to_string(SupervisorSpace s) { return s == SupervisorSpace::latent ? "latent" : "data"; }

inline SupervisorSpace parse_supervisor_space(const std::string& s) {
  if (s == "latent") return SupervisorSpace::latent;
  if (s == "data") return SupervisorSpace::data;
  throw DataError("supervisor_space must be 'latent' or 'data', got '" + s + "'");
}

/// Flat key=value text, one field per line, stable order.
inline std::string serialize_config(const TrainConfig& c) {
  std::ostringstream o;
  o << "n_layers=" << c.n_layers << '\n'
    << "hidden=" << c.hidden << '\n'
    << "epochs=" << c.epochs << '\n'
    << "ae_epochs=" << c.ae_epochs << '\n'
    << "sup_epochs=" << c.sup_epochs << '\n'
    << "batch_size=" << c.batch_size << '\n'
    << "lr=" << csv::fmt(c.lr) << '\n'
    << "lambda_sup=" << csv::fmt(c.lambda_sup) << '\n'
    << "lambda_moment=" << csv::fmt(c.lambda_moment) << '\n'
    << "lambda_embed_sup=" << csv::fmt(c.lambda_embed_sup) << '\n'
    << "disc_threshold=" << csv::fmt(c.disc_threshold) << '\n'
    << "gen_steps_per_disc_check=" << c.gen_steps_per_disc_check << '\n'
    << "seed=" << c.seed << '\n'
    << "supervisor_space=" << to_string(c.supervisor_space) << '\n'
    << "rows=" << c.rows << '\n'
    << "fit_on_train=" << (c.fit_on_train ? 1 : 0) << '\n'
    << "truncate=" << (c.truncate ? 1 : 0) << '\n'
    << "noise_draws=" << c.noise_draws << '\n';
  return o.str();
}

namespace detail {
inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw DataError("config: " + key + " is not an integer: '" + v + "'");
  return out;
}
inline double parse_f64(const std::string& key, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw DataError("config: " + key + " is not a number: '" + v + "'");
  return out;
}
inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("config: " + key + " must be 0/1/true/false");
}
}  // namespace detail

/// Applies one key=value pair; unknown keys are errors.
inline void apply_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "n_layers") c.n_layers = parse_u64(key, value);
  else if (key == "hidden") c.hidden = parse_u64(key, value);
  else if (key == "epochs") c.epochs = parse_u64(key, value);
  else if (key == "ae_epochs") c.ae_epochs = parse_u64(key, value);
  else if (key == "sup_epochs") c.sup_epochs = parse_u64(key, value);
  else if (key == "batch_size") c.batch_size = parse_u64(key, value);
  else if (key == "lr") c.lr = parse_f64(key, value);
  else if (key == "lambda_sup") c.lambda_sup = parse_f64(key, value);
  else if (key == "lambda_moment") c.lambda_moment = parse_f64(key, value);
  else if (key == "lambda_embed_sup") c.lambda_embed_sup = parse_f64(key, value);
  else if (key == "disc_threshold") c.disc_threshold = parse_f64(key, value);
  else if (key == "gen_steps_per_disc_check") c.gen_steps_per_disc_check = parse_u64(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "supervisor_space") c.supervisor_space = parse_supervisor_space(value);
  else if (key == "rows") c.rows = parse_u64(key, value);
  else if (key == "fit_on_train") c.fit_on_train = parse_bool(key, value);
  else if (key == "truncate") c.truncate = parse_bool(key, value);
  else if (key == "noise_draws") c.noise_draws = parse_u64(key, value);
  else throw DataError("config: unknown key '" + key + "'");
}

/// Parses key=value lines over `base`; '#' starts a comment.
inline TrainConfig parse_config(const std::string& text, TrainConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string clean = csv::trim(line);
    if (clean.empty()) continue;
    const auto eq = clean.find('=');
    if (eq == std::string::npos) throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    apply_config_value(base, csv::trim(clean.substr(0, eq)), csv::trim(clean.substr(eq + 1)));
  }
  return base;
}

inline TrainConfig load_config_file(const std::string& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

/// FNV-1a over the serialized config, for run logs.
inline std::uint64_t config_hash(const TrainConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace surge
