// bmrf: command-line front end (catalog, convert, simulate, fit, diagnose).

#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "bmrf/config.hpp"
#include "bmrf/configsets.hpp"
#include "bmrf/error.hpp"
#include "bmrf/io.hpp"
#include "bmrf/likelihood.hpp"
#include "bmrf/param.hpp"
#include "bmrf/prior.hpp"
#include "bmrf/sampler.hpp"
#include "bmrf/stats.hpp"

namespace fs = std::filesystem;
using namespace bmrf;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::shared_ptr<const ConfigCatalog> make_catalog(const std::string& tpl, int cap) {
  return std::make_shared<const ConfigCatalog>(build_catalog(parse_template(tpl), static_cast<std::size_t>(cap)));
}

std::string fmt_g(double v) { return fmt::format("{:.17g}", v); }

// ---------------------------------------------------------------------------
// catalog

int cmd_catalog(const std::string& tpl, int cap) {
  const auto cat = make_catalog(tpl, cap);
  fmt::print("# template {} ({} nodes), {} classes\n", cat->tpl().label(), cat->tpl().size(), cat->class_count());
  fmt::print("{:>5} {:>5} {:>12}  {}\n", "id", "size", "multiplicity", "shape");
  for (const auto& c : cat->classes())
    fmt::print("{:>5} {:>5} {:>12}  {}\n", c.id, c.order(), c.multiplicity(), cat->bitmap(c.id));
  return 0;
}

// ---------------------------------------------------------------------------
// convert

int cmd_convert(const std::string& tpl, int n, int m, const std::string& from, const std::string& input,
                const std::string& output) {
  const auto cat = make_catalog(tpl, 12);
  const LatticeSpec spec(n, m, Boundary::Torus);
  const auto table = build_conversion_table(spec, *cat);
  const auto values = parse_class_vector(read_text(input));
  if (values.size() != static_cast<std::size_t>(cat->class_count()))
    throw ValidationError(fmt::format("vector has {} entries, template {} has {} classes", values.size(), tpl,
                                      cat->class_count()));
  std::string out;
  const std::string where = fmt::format("template {} on a {}x{} torus", cat->tpl().label(), n, m);
  if (from == "phi")
    out = format_class_vector(phi_to_beta(PhiVector{values}, table).values, "beta, " + where);
  else if (from == "beta")
    out = format_class_vector(beta_to_phi(BetaVector{values}, table).values, "phi, " + where);
  else
    throw ValidationError("--from must be phi or beta");
  if (output.empty())
    fmt::print("{}", out);
  else
    atomic_write(output, out);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string tpl = "2x2";
  int n = 32;
  int m = 32;
  std::string boundary = "torus";
  std::string model = "ising:0.4";
  int sweeps = 200;
  std::uint64_t seed = 1;
  std::string output;
  std::string covariates_out;
  std::string covariates_in;
  std::vector<double> theta;
};

std::pair<std::string, std::string> split_model(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {s, ""};
  return {s.substr(0, colon), s.substr(colon + 1)};
}

double parse_param(const std::string& what, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw ValidationError("model '" + what + "' needs a numeric parameter, got '" + v + "'");
}

// Irregular region plus two standardised smooth covariates, standing in for
// the red-deer data, which is not distributed.
CovariateTable synthetic_region(int n, int m, Rng& rng) {
  CovariateTable t;
  t.names = {"elevation", "cover"};
  t.field = CovariateField{n, m, 2, std::vector<double>(static_cast<std::size_t>(n) * m * 2)};
  t.active.assign(static_cast<std::size_t>(n) * m, 0);
  const double ci = (n - 1) / 2.0;
  const double cj = (m - 1) / 2.0;
  const double a1 = uniform01(rng) * 6.28318;
  const double a2 = uniform01(rng) * 6.28318;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double di = (i - ci) / (n / 2.0);
      const double dj = (j - cj) / (m / 2.0);
      const double ang = std::atan2(di, dj);
      const double radius = 0.8 + 0.12 * std::sin(3 * ang + a1) + 0.06 * std::cos(5 * ang + a2);
      const int site = i * m + j;
      t.active[site] = std::sqrt(di * di + dj * dj) < radius;
      t.field.y[site * 2] = di;
      t.field.y[site * 2 + 1] = std::sin(3.0 * dj + a1) * std::cos(2.0 * di);
    }
  for (int k = 0; k < 2; ++k) {
    double sum = 0.0;
    double sq = 0.0;
    int cnt = 0;
    for (int s = 0; s < n * m; ++s)
      if (t.active[s]) {
        sum += t.field.y[s * 2 + k];
        ++cnt;
      }
    const double mean = sum / cnt;
    for (int s = 0; s < n * m; ++s)
      if (t.active[s]) sq += std::pow(t.field.y[s * 2 + k] - mean, 2);
    const double sd = std::sqrt(sq / cnt);
    for (int s = 0; s < n * m; ++s) t.field.y[s * 2 + k] = t.active[s] ? (t.field.y[s * 2 + k] - mean) / sd : 0.0;
  }
  return t;
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.output.empty()) throw ValidationError("--output is required");
  const auto cat = make_catalog(a.tpl, 12);
  LatticeSpec spec(a.n, a.m, parse_boundary(a.boundary));
  Rng rng = stream(a.seed, {0});
  const auto [kind, arg] = split_model(a.model);

  std::optional<CovariateTable> cov;
  PartitionState z;
  if (kind == "ising") {
    z = PartitionState::from_phi(ising_phi(parse_param(kind, arg), *cat));
  } else if (kind == "independence") {
    z = PartitionState::from_phi(independence_phi(parse_param(kind, arg), *cat));
  } else if (kind == "state") {
    z = read_state(arg, cat->class_count());
  } else if (kind == "phi") {
    z = PartitionState::from_phi(PhiVector{parse_class_vector(read_text(arg))});
  } else if (kind == "reddeer") {
    if (spec.boundary != Boundary::Free) throw ValidationError("the reddeer model needs --boundary free");
    cov = synthetic_region(a.n, a.m, rng);
    spec.active = cov->active;
    z = PartitionState::from_phi(ising_phi(arg.empty() ? 0.4 : parse_param(kind, arg), *cat));
    z.set_theta(a.theta.empty() ? std::vector<double>{0.8, -0.5} : a.theta);
  } else {
    throw ValidationError("unknown model '" + a.model + "' (expected ising:, independence:, state:, phi: or reddeer)");
  }
  if (!a.covariates_in.empty()) {
    if (cov) throw ValidationError("--covariates cannot be combined with the reddeer model");
    cov = read_covariates(a.covariates_in, a.n, a.m);
    if (!cov->active.empty()) {
      if (spec.boundary != Boundary::Free) throw ValidationError("a node mask needs --boundary free");
      spec.active = cov->active;
    }
    if (a.theta.size() != static_cast<std::size_t>(cov->field.K))
      throw ValidationError("--theta must give one coefficient per covariate");
    z.set_theta(a.theta);
  }
  if (z.class_count() != cat->class_count()) throw ValidationError("model does not match the template catalog");

  const Geometry geom(spec, cat);
  const BinaryImage x = gibbs_sample(z, geom, cov ? &cov->field : nullptr, a.sweeps, rng, nullptr, Exec::Parallel);
  write_image(a.output, x);
  if (cov && kind == "reddeer") {
    const std::string path = a.covariates_out.empty() ? a.output + ".covariates.csv" : a.covariates_out;
    atomic_write(path, format_covariates_csv(*cov));
    fmt::print("covariates: {}\n", path);
  }
  json meta = {{"model", a.model},         {"template", cat->tpl().label()}, {"n", a.n}, {"m", a.m},
               {"boundary", a.boundary},   {"sweeps", a.sweeps},             {"seed", a.seed},
               {"state", json::parse(state_to_json(z))}};
  atomic_write(a.output + ".meta.json", meta.dump(2) + "\n");
  long ones = std::accumulate(x.data.begin(), x.data.end(), 0L);
  fmt::print("wrote {} ({}x{}, {} ones)\n", a.output, x.n, x.m, ones);
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct Problem {
  RunConfig cfg;
  BinaryImage x;
  std::shared_ptr<const ConfigCatalog> cat;
  std::shared_ptr<const Geometry> geom;
  std::shared_ptr<const CovariateField> cov;
};

Problem load_problem(const RunConfig& cfg) {
  if (cfg.image.empty()) throw ValidationError("data.image is required (--data)");
  Problem p;
  p.cfg = cfg;
  const Boundary b = parse_boundary(cfg.boundary);
  p.x = read_image(cfg.image, b);
  p.cat = make_catalog(cfg.tpl, cfg.catalog_cap);
  LatticeSpec spec(p.x.n, p.x.m, b);
  if (!cfg.covariates.empty()) {
    auto table = read_covariates(cfg.covariates, p.x.n, p.x.m);
    if (!table.active.empty()) {
      if (b != Boundary::Free) throw ValidationError("a node mask needs lattice.boundary = free");
      spec.active = table.active;
      for (int s = 0; s < p.x.sites(); ++s)
        if (!spec.active[s]) p.x.data[s] = 0;
    }
    p.cov = std::make_shared<const CovariateField>(std::move(table.field));
  }
  p.geom = std::make_shared<const Geometry>(spec, p.cat);
  return p;
}

PartitionState initial_state(const RunConfig& cfg, int class_count, int theta_dim) {
  if (cfg.init == "single") return PartitionState::single_group(class_count, theta_dim);
  if (cfg.init == "split") return PartitionState::full_split(class_count, theta_dim);
  auto z = read_state(cfg.init, class_count);
  if (z.theta().empty() && theta_dim > 0) z.set_theta(std::vector<double>(theta_dim, 0.0));
  return z;
}

std::string trace_header(int theta_dim) {
  std::string h = "iteration,r,phi_min,phi_max,phi_sumsq";
  for (int k = 0; k < theta_dim; ++k) h += fmt::format(",theta_{}", k + 1);
  return h + ",log_post,acc_value,acc_move,acc_split_merge,acc_covariate\n";
}

std::string trace_line(const ChainRecord& rec) {
  const auto& v = rec.z.values();
  double sq = 0.0;
  for (double x : v) sq += x * x;
  std::string line = fmt::format("{},{},{},{},{}", rec.iteration, rec.z.r(), fmt_g(*std::min_element(v.begin(), v.end())),
                                 fmt_g(*std::max_element(v.begin(), v.end())), fmt_g(sq));
  for (double t : rec.z.theta()) line += "," + fmt_g(t);
  line += "," + fmt_g(rec.log_post);
  for (int a : rec.accepted) line += fmt::format(",{}", a);
  return line + "\n";
}

int cmd_fit(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides) {
  const auto parsed = parse_config(config_path, overrides);
  for (const auto& k : parsed.overridden) fmt::print(stderr, "note: command-line value for {} overrides the config file\n", k);
  const Problem p = load_problem(parsed.config);
  const RunConfig& cfg = p.cfg;
  const int theta_dim = p.cov ? p.cov->K : 0;

  const LikelihoodEngine engine(p.geom, cfg.engine_config(), p.cov);
  const PartitionPrior prior(cfg.prior_config(p.cat->class_count()));
  const PartitionState init = initial_state(cfg, p.cat->class_count(), theta_dim);
  const SamplerConfig scfg = cfg.sampler_config();

  std::string trace = trace_header(theta_dim);
  std::string states;
  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);
  ChainHooks hooks;
  hooks.on_record = [&](const ChainRecord& rec) {
    trace += trace_line(rec);
    states += state_to_json(rec.z) + "\n";
  };
  hooks.on_checkpoint = [&](long iter, const PartitionState& z) {
    json j = {{"iteration", iter}, {"state", json::parse(state_to_json(z))}};
    atomic_write(dir + "/checkpoint.json", j.dump() + "\n");
  };

  const ChainSummary sum = scfg.tree_depth > 1 ? run_chain_tree(p.x, scfg, engine, prior, init, hooks)
                                               : run_chain(p.x, scfg, engine, prior, init, hooks);

  atomic_write(dir + "/trace.csv", trace);
  atomic_write(dir + "/states.jsonl", states);
  json meta = json::parse(cfg.to_json());
  // Input paths are stored absolute so the run can be replayed or diagnosed
  // from any working directory.
  auto absolute = [&](const std::string& key) {
    const std::string v = meta[key].get<std::string>();
    if (!v.empty()) meta[key] = std::filesystem::absolute(v).lexically_normal().string();
  };
  absolute("data.image");
  absolute("data.covariates");
  if (cfg.init != "single" && cfg.init != "split") absolute("sampler.init");
  json rates = json::object();
  for (int k = 0; k < kKernelCount; ++k)
    rates[to_string(static_cast<Kernel>(k))] = sum.counters.rate(static_cast<Kernel>(k));
  meta["run_info"] = {{"version", kVersion},
                      {"n", p.x.n},
                      {"m", p.x.m},
                      {"classes", p.cat->class_count()},
                      {"active_sites", p.geom->active_sites().size()},
                      {"records", sum.records},
                      {"likelihood_evaluations", sum.likelihood_evaluations},
                      {"acceptance", rates}};
  atomic_write(dir + "/meta.json", meta.dump(2) + "\n");

  fmt::print("iterations {}  records {}  final r {}\n", scfg.iterations, sum.records, sum.final_state.r());
  for (int k = 0; k < kKernelCount; ++k)
    if (sum.counters.proposed[k])
      fmt::print("  {:<12} acceptance {:.3f}\n", to_string(static_cast<Kernel>(k)), sum.counters.rate(static_cast<Kernel>(k)));
  fmt::print("outputs in {}\n", dir);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

int cmd_diagnose(const std::string& run_dir, double burn_in, const std::vector<std::string>& stat_names, int ppc_states,
                 int ppc_sweeps) {
  const auto parsed = parse_config(run_dir + "/meta.json", {});
  const Problem p = load_problem(parsed.config);
  auto states = read_states_jsonl(run_dir + "/states.jsonl", p.cat->class_count());
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ValidationError("--burn-in must lie in [0, 1)");
  states.erase(states.begin(), states.begin() + static_cast<long>(burn_in * states.size()));
  if (states.empty()) throw ValidationError("no states left after burn-in");
  const int K = p.cat->class_count();

  const auto pm = pair_matrix(states);
  std::string out = "class";
  for (int b = 0; b < K; ++b) out += fmt::format(",c{}", b);
  out += "\n";
  for (int a = 0; a < K; ++a) {
    out += fmt::format("c{}", a);
    for (int b = 0; b < K; ++b) out += fmt::format(",{:.6f}", pm.at(a, b));
    out += "\n";
  }
  atomic_write(run_dir + "/pair_matrix.csv", out);

  const auto rh = r_histogram(states);
  out = "r,probability\n";
  for (int r = 1; r < static_cast<int>(rh.size()); ++r) out += fmt::format("{},{:.6f}\n", r, rh[r]);
  atomic_write(run_dir + "/r_hist.csv", out);

  out = "probability,partition\n";
  const auto freq = partition_frequencies(states);
  for (std::size_t q = 0; q < std::min<std::size_t>(freq.size(), 20); ++q)
    out += fmt::format("{:.6f},\"{}\"\n", freq[q].second, json(freq[q].first).dump());
  atomic_write(run_dir + "/partitions.csv", out);

  if (p.geom->spec().n >= p.cat->tpl().height() && p.geom->spec().m >= p.cat->tpl().width()) {
    // Beta is reported with the torus table of the same size for either boundary.
    const auto table = build_conversion_table(LatticeSpec(p.x.n, p.x.m, Boundary::Torus), *p.cat);
    out = "class,shape,mean,lower95,median,upper95\n";
    for (const auto& b : beta_posterior(states, table))
      out += fmt::format("{},{},{},{},{},{}\n", b.cls, p.cat->bitmap(b.cls), fmt_g(b.mean), fmt_g(b.lower),
                         fmt_g(b.median), fmt_g(b.upper));
    atomic_write(run_dir + "/beta_posterior.csv", out);
  }

  if (!stat_names.empty() && ppc_states > 0) {
    std::vector<StatisticId> ids;
    for (const auto& s : stat_names) ids.push_back(parse_statistic(s, p.cat->tpl()));
    std::vector<PartitionState> pick;
    const std::size_t step = std::max<std::size_t>(1, states.size() / ppc_states);
    for (std::size_t q = 0; q < states.size() && pick.size() < static_cast<std::size_t>(ppc_states); q += step)
      pick.push_back(states[q]);
    const auto ppc = posterior_predictive(pick, *p.geom, p.cov.get(), ids, 1, ppc_sweeps, parsed.config.seed, Exec::Parallel);
    for (std::size_t q = 0; q < ids.size(); ++q) {
      out = fmt::format("draw,{}\n", stat_names[q]);
      const auto& v = ppc.at(ids[q].name());
      for (std::size_t d = 0; d < v.size(); ++d) out += fmt::format("{},{}\n", d, v[d]);
      out += fmt::format("data,{}\n", statistic(p.x, ids[q], *p.geom));
      std::string file = stat_names[q];
      for (char& c : file)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
      atomic_write(run_dir + "/ppc_" + file + ".csv", out);
    }
  }
  fmt::print("{} states after burn-in; most visited partition has probability {:.3f}\n", states.size(), freq.front().second);
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const CapError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for stationary binary Markov random fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string tpl = "2x2";
  int cap = 12;
  auto* catalog = app.add_subcommand("catalog", "List the configuration classes of a template");
  catalog->add_option("--template", tpl, "Template, e.g. 2x2 or a bitmap like 11/10")->capture_default_str();
  catalog->add_option("--cap", cap, "Largest template size to enumerate")->capture_default_str();

  std::string from = "phi";
  std::string input;
  std::string output;
  int n = 8;
  int m = 8;
  auto* convert = app.add_subcommand("convert", "Convert a phi vector to beta or back (torus)");
  convert->add_option("--template", tpl)->capture_default_str();
  convert->add_option("--n", n, "Lattice rows")->capture_default_str();
  convert->add_option("--m", m, "Lattice columns")->capture_default_str();
  convert->add_option("--from", from, "phi or beta")->capture_default_str();
  convert->add_option("--input", input, "Vector file (class-id value per line)")->required();
  convert->add_option("--output", output, "Output file (stdout when omitted)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw an image by Gibbs sampling");
  simulate->add_option("--template", sim.tpl)->capture_default_str();
  simulate->add_option("--n", sim.n)->capture_default_str();
  simulate->add_option("--m", sim.m)->capture_default_str();
  simulate->add_option("--boundary", sim.boundary, "torus or free")->capture_default_str();
  simulate->add_option("--model", sim.model, "ising:<omega>, independence:<p>, state:<file>, phi:<file>, reddeer[:<omega>]")
      ->capture_default_str();
  simulate->add_option("--sweeps", sim.sweeps)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--output", sim.output, "Image path (.pbm for PBM, otherwise text)")->required();
  simulate->add_option("--covariates", sim.covariates_in, "Covariate CSV to condition on");
  simulate->add_option("--covariates-out", sim.covariates_out, "Where the reddeer model writes its covariates");
  simulate->add_option("--theta", sim.theta, "Covariate coefficients");

  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  auto* fit = app.add_subcommand("fit", "Sample the posterior over partitions and values");
  fit->add_option("--config", config_path, "JSON config file (a previous meta.json works)");
  const std::vector<std::pair<std::string, std::string>> fit_flags = {
      {"--data", "data.image"},          {"--covariates", "data.covariates"},
      {"--template", "model.template"},  {"--boundary", "lattice.boundary"},
      {"--engine", "likelihood.engine"}, {"--exchange-sweeps", "likelihood.exchange_sweeps"},
      {"--gamma", "prior.gamma"},        {"--sigma-phi", "prior.sigma_phi"},
      {"--sigma", "sampler.sigma"},      {"--iterations", "sampler.iterations"},
      {"--thinning", "sampler.thinning"}, {"--seed", "sampler.seed"},
      {"--tree-depth", "sampler.tree_depth"}, {"--init", "sampler.init"},
      {"--out", "output.dir"}};
  for (const auto& [flag, key] : fit_flags) fit->add_option(flag, flag_values[key], "Sets " + key);
  fit->add_option("--set", sets, "Any config key as key=value");

  std::string run_dir;
  double burn_in = 0.1;
  std::vector<std::string> stat_names;
  int ppc_states = 200;
  int ppc_sweeps = 100;
  auto* diagnose = app.add_subcommand("diagnose", "Summaries of a finished fit");
  diagnose->add_option("--run", run_dir, "Output directory of fit")->required();
  diagnose->add_option("--burn-in", burn_in, "Fraction of states discarded")->capture_default_str();
  diagnose->add_option("--stat", stat_names, "sum, vpairs, hpairs or pattern:<bitmap>");
  diagnose->add_option("--ppc-states", ppc_states)->capture_default_str();
  diagnose->add_option("--ppc-sweeps", ppc_sweeps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*catalog) return cmd_catalog(tpl, cap);
    if (*convert) return cmd_convert(tpl, n, m, from, input, output);
    if (*simulate) return cmd_simulate(sim);
    if (*fit) {
      std::vector<std::pair<std::string, std::string>> overrides;
      for (const auto& [flag, key] : fit_flags)
        if (fit->count(flag)) overrides.emplace_back(key, flag_values[key]);
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
      }
      return cmd_fit(config_path, overrides);
    }
    if (*diagnose) return cmd_diagnose(run_dir, burn_in, stat_names, ppc_states, ppc_sweeps);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
