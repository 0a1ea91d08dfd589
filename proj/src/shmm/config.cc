// shmm/config.cc

// Copyright 2026  the shmm-aud authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "shmm/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

namespace shmm {

namespace {

std::string Trim(const std::string &s) {
  size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigFile ConfigFile::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  ConfigFile cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = Trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'key = value'");
    std::string key = Trim(stripped.substr(0, eq));
    std::string value = Trim(stripped.substr(eq + 1));
    if (key.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

void ConfigFile::Set(const std::string &key, const std::string &value) {
  if (key.empty()) throw UsageError("config: empty key");
  values_[key] = value;
}

const std::string &ConfigFile::Get(const std::string &key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("config: unknown key '" + key + "'");
  return it->second;
}

namespace {

class Resolver {
 public:
  explicit Resolver(const ConfigFile &file) : file_(file) {}

  int64_t Int(const std::string &key, int64_t fallback) {
    const std::string *raw = Take(key);
    if (!raw) return fallback;
    int64_t v = 0;
    auto [p, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc() || p != raw->data() + raw->size())
      throw UsageError("config: key '" + key + "' wants an integer, got '" +
                       *raw + "'");
    return v;
  }

  double Real(const std::string &key, double fallback) {
    const std::string *raw = Take(key);
    if (!raw) return fallback;
    try {
      size_t used = 0;
      double v = std::stod(*raw, &used);
      if (used != raw->size()) throw std::invalid_argument(*raw);
      return v;
    } catch (const std::exception &) {
      throw UsageError("config: key '" + key + "' wants a real, got '" + *raw +
                       "'");
    }
  }

  bool Bool(const std::string &key, bool fallback) {
    const std::string *raw = Take(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "1") return true;
    if (*raw == "false" || *raw == "0") return false;
    throw UsageError("config: key '" + key + "' wants true/false, got '" +
                     *raw + "'");
  }

  std::string Str(const std::string &key, const std::string &fallback) {
    const std::string *raw = Take(key);
    return raw ? *raw : fallback;
  }

  void FinishOrThrow() const {
    for (const auto &[key, value] : file_.values())
      if (!taken_.count(key))
        throw UsageError("config: unknown key '" + key + "'");
  }

 private:
  const std::string *Take(const std::string &key) {
    taken_.insert(key);
    auto it = file_.values().find(key);
    return it == file_.values().end() ? nullptr : &it->second;
  }

  const ConfigFile &file_;
  std::set<std::string> taken_;
};

}  // namespace

PipelineConfig PipelineConfig::Resolve(const ConfigFile &file) {
  PipelineConfig cfg;
  Resolver r(file);
  cfg.layout.num_components = static_cast<int>(r.Int("num_components", 4));
  cfg.layout.feature_dim = static_cast<int>(r.Int("feature_dim", 0));
  cfg.subspace_dim = static_cast<int>(r.Int("subspace_dim", 0));
  cfg.num_units = static_cast<int>(r.Int("num_units", 100));
  cfg.sigma2_w = r.Real("sigma2_w", 1.0);
  cfg.self_loop_prob = r.Real("self_loop_prob", 0.5);
  cfg.training.num_samples = static_cast<int>(r.Int("num_samples", 10));
  cfg.training.phi_update_interval =
      static_cast<int>(r.Int("phi_update_interval", 1000));
  cfg.training.pretrain_updates =
      static_cast<int>(r.Int("pretrain_updates", 15000));
  cfg.training.outer_iterations =
      static_cast<int>(r.Int("outer_iterations", 30));
  cfg.training.minibatch_size = static_cast<int>(r.Int("minibatch_size", 100));
  cfg.training.learning_rate = r.Real("learning_rate", 1e-3);
  cfg.training.beta1 = r.Real("beta1", 0.9);
  cfg.training.beta2 = r.Real("beta2", 0.999);
  cfg.training.epsilon = r.Real("epsilon", 1e-8);
  cfg.training.seed = static_cast<uint64_t>(r.Int("seed", 0));
  cfg.training.num_threads = static_cast<int>(r.Int("threads", 1));
  cfg.freeze_subspace = r.Bool("freeze_subspace", true);
  cfg.init_b_from_stats = r.Bool("init_b_from_stats", true);
  cfg.collapse_repeats = r.Bool("collapse_repeats", true);
  cfg.tolerance_frames = static_cast<int>(r.Int("tolerance_frames", 2));
  cfg.frame_rate = static_cast<uint32_t>(r.Int("frame_rate", 100));
  cfg.log_wall_time = r.Bool("log_wall_time", true);

  cfg.synth.subspace_dim = static_cast<int>(r.Int("gen.subspace_dim", 4));
  cfg.synth.num_components = static_cast<int>(r.Int("gen.num_components", 2));
  cfg.synth.feature_dim = static_cast<int>(r.Int("gen.feature_dim", 8));
  cfg.synth.languages = r.Str("gen.languages", cfg.synth.languages);
  cfg.synth.target = r.Str("gen.target", cfg.synth.target);
  cfg.synth.min_phones_per_utt =
      static_cast<int>(r.Int("gen.min_phones_per_utt", 3));
  cfg.synth.max_phones_per_utt =
      static_cast<int>(r.Int("gen.max_phones_per_utt", 8));
  cfg.synth.seed = static_cast<uint64_t>(r.Int("gen.seed", 0));
  r.FinishOrThrow();

  if (cfg.layout.num_components < 1)
    throw UsageError("config: num_components must be >= 1");
  if (cfg.subspace_dim < 0)
    throw UsageError("config: subspace_dim must be >= 0 (0 = auto)");
  if (cfg.layout.feature_dim > 0 && cfg.subspace_dim > cfg.layout.PsiDim())
    throw UsageError("config: subspace_dim exceeds the parameter dimension");
  if (cfg.num_units < 1) throw UsageError("config: num_units must be >= 1");
  if (cfg.sigma2_w <= 0.0) throw UsageError("config: sigma2_w must be > 0");
  if (!(cfg.self_loop_prob > 0.0 && cfg.self_loop_prob < 1.0))
    throw UsageError("config: self_loop_prob must lie in (0, 1)");
  if (cfg.tolerance_frames < 0)
    throw UsageError("config: tolerance_frames must be >= 0");
  if (cfg.synth.min_phones_per_utt < 1 ||
      cfg.synth.max_phones_per_utt < cfg.synth.min_phones_per_utt)
    throw UsageError("config: bad gen.*_phones_per_utt range");
  cfg.training.Validate();
  return cfg;
}

int PipelineConfig::SubspaceDimFor(size_t num_languages) const {
  if (subspace_dim > 0) return subspace_dim;
  if (num_languages <= 1) return 35;
  if (num_languages == 2) return 70;
  return 100;
}

}  // namespace shmm
