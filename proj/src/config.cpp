#include "bmrf/config.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <json.hpp>

#include "bmrf/error.hpp"
#include "bmrf/io.hpp"

namespace bmrf {

using nlohmann::json;

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>)
      out = std::stod(v, &used);
    else if constexpr (std::is_same_v<T, std::uint64_t>)
      out = std::stoull(v, &used);
    else
      out = static_cast<T>(std::stoll(v, &used));
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::logic_error&) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not a valid number");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string fmt_double(double v) {
  // Shortest round-trip representation.
  return json(v).dump();
}

enum class Kind { Int, Double, Bool, String };

struct KeyDef {
  Kind kind;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BMRF_STRING_KEY(name, field) \
  {name, {Kind::String, [](RunConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
          [](const RunConfig& c) { return c.field; }}}
#define BMRF_NUMBER_KEY(name, field, type, kind) \
  {name, {kind, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_number<type>(k, v); }, \
          [](const RunConfig& c) { return kind == Kind::Double ? fmt_double(static_cast<double>(c.field)) : std::to_string(c.field); }}}

const std::map<std::string, KeyDef>& registry() {
  static const std::map<std::string, KeyDef> reg = {
      BMRF_STRING_KEY("lattice.boundary", boundary),
      BMRF_STRING_KEY("model.template", tpl),
      BMRF_NUMBER_KEY("model.catalog_cap", catalog_cap, int, Kind::Int),
      BMRF_STRING_KEY("likelihood.engine", engine),
      BMRF_NUMBER_KEY("likelihood.exchange_sweeps", exchange_sweeps, int, Kind::Int),
      BMRF_STRING_KEY("likelihood.exchange_start", exchange_start),
      {"runtime.parallel",
       {Kind::Bool, [](RunConfig& c, const std::string& k, const std::string& v) { c.parallel = parse_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.parallel ? "true" : "false"); }}},
      BMRF_NUMBER_KEY("prior.gamma", gamma, double, Kind::Double),
      BMRF_NUMBER_KEY("prior.sigma_phi", sigma_phi, double, Kind::Double),
      BMRF_NUMBER_KEY("sampler.sigma", sigma, double, Kind::Double),
      BMRF_NUMBER_KEY("sampler.covariate_step", covariate_step, double, Kind::Double),
      BMRF_NUMBER_KEY("sampler.covariate_prior_sd", covariate_prior_sd, double, Kind::Double),
      BMRF_NUMBER_KEY("sampler.iterations", iterations, long, Kind::Int),
      BMRF_NUMBER_KEY("sampler.thinning", thinning, long, Kind::Int),
      BMRF_NUMBER_KEY("sampler.seed", seed, std::uint64_t, Kind::Int),
      BMRF_NUMBER_KEY("sampler.tree_depth", tree_depth, int, Kind::Int),
      BMRF_NUMBER_KEY("sampler.checkpoint_every", checkpoint_every, long, Kind::Int),
      BMRF_STRING_KEY("sampler.init", init),
      BMRF_STRING_KEY("data.image", image),
      BMRF_STRING_KEY("data.covariates", covariates),
      BMRF_STRING_KEY("output.dir", output_dir),
  };
  return reg;
}

#undef BMRF_STRING_KEY
#undef BMRF_NUMBER_KEY

const KeyDef& def_of(const std::string& key) {
  const auto& reg = registry();
  auto it = reg.find(key);
  if (it == reg.end()) throw ValidationError("unknown config key '" + key + "'");
  return it->second;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object())
      flatten(v, key, out);
    else if (v.is_string())
      out.emplace_back(key, v.get<std::string>());
    else if (v.is_boolean())
      out.emplace_back(key, v.get<bool>() ? "true" : "false");
    else if (v.is_number())
      out.emplace_back(key, v.dump());
    else
      throw ValidationError("config key '" + key + "' has an unsupported value type");
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { def_of(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return def_of(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
  }();
  return k;
}

void RunConfig::validate() const {
  parse_boundary(boundary);
  parse_template(tpl);
  parse_engine(engine);
  parse_exchange_start(exchange_start);
  if (catalog_cap < 1 || catalog_cap > 20) throw ValidationError("model.catalog_cap must lie in [1, 20]");
  if (exchange_sweeps < 1) throw ValidationError("likelihood.exchange_sweeps must be at least 1");
  PriorConfig{gamma, sigma_phi, 1}.validate();
  sampler_config().validate();
}

EngineConfig RunConfig::engine_config() const {
  EngineConfig e;
  e.kind = parse_engine(engine);
  e.exchange_sweeps = exchange_sweeps;
  e.exchange_start = parse_exchange_start(exchange_start);
  e.exec = parallel ? Exec::Parallel : Exec::Serial;
  return e;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig s;
  s.sigma = sigma;
  s.covariate_step = covariate_step;
  s.covariate_prior_sd = covariate_prior_sd;
  s.iterations = iterations;
  s.thinning = thinning;
  s.seed = seed;
  s.tree_depth = tree_depth;
  s.checkpoint_every = checkpoint_every;
  return s;
}

PriorConfig RunConfig::prior_config(int class_count) const { return PriorConfig{gamma, sigma_phi, class_count}; }

std::string RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [name, def] : registry()) {
    const std::string v = def.get(*this);
    switch (def.kind) {
      case Kind::String: j[name] = v; break;
      case Kind::Bool: j[name] = v == "true"; break;
      case Kind::Int: j[name] = json::parse(v); break;
      case Kind::Double: j[name] = json::parse(v); break;
    }
  }
  return j.dump(2);
}

std::vector<std::pair<std::string, std::string>> parse_config_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  j.erase("run_info");
  std::vector<std::pair<std::string, std::string>> out;
  flatten(j, "", out);
  return out;
}

ParsedConfig parse_config(const std::string& file_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  ParsedConfig pc;
  std::set<std::string> from_file;
  if (!file_path.empty()) {
    for (const auto& [k, v] : parse_config_document(read_text(file_path))) {
      pc.config.set(k, v);
      from_file.insert(k);
    }
  }
  for (const auto& [k, v] : overrides) {
    const std::string before = from_file.count(k) ? pc.config.get(k) : std::string();
    pc.config.set(k, v);
    if (from_file.count(k) && pc.config.get(k) != before) pc.overridden.push_back(k);
  }
  pc.config.validate();
  return pc;
}

}  // namespace bmrf
