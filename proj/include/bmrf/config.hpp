#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bmrf/likelihood.hpp"
#include "bmrf/prior.hpp"
#include "bmrf/sampler.hpp"

namespace bmrf {

// Merged view of every configuration key. Keys are dotted ("prior.gamma");
// a config file is a JSON object, either flat with dotted keys or nested.
struct RunConfig {
  // lattice / model
  std::string boundary = "torus";
  std::string tpl = "2x2";
  int catalog_cap = 12;
  // likelihood
  std::string engine = "exchange";
  int exchange_sweeps = 50;
  std::string exchange_start = "data";
  bool parallel = true;
  // prior
  double gamma = 0.5;
  double sigma_phi = 10.0;
  // sampler
  double sigma = 0.3;
  double covariate_step = 0.1;
  double covariate_prior_sd = 10.0;
  long iterations = 1000;
  long thinning = 1;
  std::uint64_t seed = 1;
  int tree_depth = 1;
  long checkpoint_every = 0;
  std::string init = "single";  // single | split | path to a state file
  // data / output
  std::string image;
  std::string covariates;
  std::string output_dir = "out";

  // Sets one key from its textual value; unknown keys and bad values throw
  // ValidationError naming the key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;

  EngineConfig engine_config() const;
  SamplerConfig sampler_config() const;
  PriorConfig prior_config(int class_count) const;

  // Flat JSON object of every key with typed values.
  std::string to_json() const;
};

// Key/value pairs of a JSON config document, flattened to dotted keys.
// Top-level "run_info" is metadata written by fit and is skipped.
std::vector<std::pair<std::string, std::string>> parse_config_document(const std::string& text);

// Defaults, then the file (if any), then the overrides in order. Returns the
// config and the list of keys where an override replaced a file value.
struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> overridden;
};

ParsedConfig parse_config(const std::string& file_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace bmrf
