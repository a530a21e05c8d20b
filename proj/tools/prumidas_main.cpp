// prumidas: simulate / fit / effects / volatility / diagnose / summarize.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "prumidas/gibbs.hpp"
#include "prumidas/kernels.hpp"
#include "prumidas/posterior.hpp"
#include "prumidas/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prumidas;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Written atomically (tmp + rename) as the last act of a successful run.
void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& cfg_hash, std::uint64_t seed,
                    const std::string& started, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config_hash"] = cfg_hash;
  m["seed"] = seed;
  m["started"] = started;
  m["finished"] = now_iso();
  m["version"] = kVersion;
  for (const auto& p : inputs) m["inputs"].push_back({{"path", p}, {"digest", file_digest(p)}});
  m["outputs"] = outputs;
  const std::string tmp = dir + "/run_manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << m.dump(2) << "\n";
  }
  fs::rename(tmp, dir + "/run_manifest.json");
}

// Mild default truth when the scenario file does not pin one: small positive
// AR coefficients, alternating unit covariate effects, unit variances.
TrueParameters default_truth(const ModelSpec& spec) {
  TrueParameters t;
  t.state = ParameterState::zeros(spec);
  const CoefLayout layout(spec);
  for (std::size_t a = 0; a < spec.ar_lags.size(); ++a) {
    t.state.gamma[layout.alpha_index(static_cast<int>(a))] = 0.3 / (1 << a);
  }
  for (int j = 0; j < spec.n_covariates(); ++j) {
    t.state.gamma[layout.beta_index(j)] = (j % 2 == 0) ? 1.0 : -1.0;
  }
  t.state.q_mu = t.state.q_alpha = t.state.q_beta = 0.01;
  t.state.r_mu = t.state.r_alpha = t.state.r_beta = 0.01;
  return t;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  const std::string started = now_iso();
  const json j = read_json(scenario_path);
  ModelSpec spec;
  ScenarioConfig scen;
  try {
    spec = j.at("spec").get<ModelSpec>();
    spec.validate();
    if (j.contains("scenario")) scen = j.at("scenario").get<ScenarioConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(scenario_path + ": " + e.what());
  }
  if (seed_override) scen.seed = *seed_override;
  TrueParameters truth =
      j.contains("truth") ? truth_from_json(j.at("truth"), spec) : default_truth(spec);

  fs::create_directories(out_dir);
  Rng rng(scen.seed);
  const SimulatedPanel panel = generate_panel(spec, truth, scen, rng);
  write_simulation(panel, truth, scen, out_dir);

  json cfg = {{"spec", spec}, {"scenario", scen}};
  std::vector<std::string> outputs = {"daily.csv", "data_manifest.json", "truth.json"};
  for (const auto& t : panel.hourly) outputs.push_back(t.country + "_hourly.csv");
  write_manifest(out_dir, "simulate", config_hash(cfg), scen.seed, started,
                 {scenario_path}, outputs);
  std::cerr << "simulated " << spec.n_countries << " countries x "
            << panel.dataset.n_days << " days into " << out_dir << "\n";
  return 0;
}

PanelDataset load_from_data_manifest(const std::string& manifest_path, const ModelSpec& spec,
                                     const DateFilter& filter) {
  const json m = read_json(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<HourlyTable> hourly;
  try {
    for (const auto& c : m.at("countries")) {
      hourly.push_back(ingest_hourly((base / c.at("hourly_csv").get<std::string>()).string(),
                                     c.at("name").get<std::string>(), spec.hours_per_day));
    }
    const DailyTable daily = ingest_daily((base / m.at("daily_csv").get<std::string>()).string());
    return align_and_preprocess(hourly, daily, spec, filter);
  } catch (const json::exception& e) {
    throw ConfigError(manifest_path + ": " + e.what());
  }
}

int cmd_fit(const std::string& config_path, const std::string& data_path,
            const std::string& out_dir, const std::string& from, const std::string& to,
            int chains, std::optional<std::uint64_t> seed_override,
            std::optional<int> burn_in, std::optional<int> retained,
            std::optional<int> thin, bool no_effects, bool serial) {
  const std::string started = now_iso();
  const json j = read_json(config_path);
  ModelSpec spec;
  PriorConfig prior;
  SamplerConfig scfg;
  try {
    spec = j.at("spec").get<ModelSpec>();
    if (j.contains("prior")) prior = j.at("prior").get<PriorConfig>();
    if (j.contains("sampler")) scfg = j.at("sampler").get<SamplerConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(config_path + ": " + e.what());
  }
  if (seed_override) scfg.seed = *seed_override;
  if (burn_in) scfg.burn_in = *burn_in;
  if (retained) scfg.retained = *retained;
  if (thin) scfg.thin = *thin;
  if (no_effects) scfg.store_random_effects = false;
  try {
    spec.validate();
    prior.validate();
    scfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  kernels::set_parallel(!serial);

  DateFilter filter;
  if (!from.empty()) filter.from = Date::parse(from);
  if (!to.empty()) filter.to = Date::parse(to);

  const PanelDataset data = load_from_data_manifest(data_path, spec, filter);
  fs::create_directories(out_dir + "/dataset");
  export_dataset(data, out_dir + "/dataset");

  const json cfg = {{"spec", spec}, {"prior", prior}, {"sampler", scfg}};
  const std::string hash = config_hash(cfg);
  {
    std::ofstream out(out_dir + "/fit_config.json");
    out << cfg.dump(2) << "\n";
  }

  std::vector<std::string> outputs = {"dataset/manifest.json", "fit_config.json"};
  const GibbsSampler sampler(data, prior, scfg);
  for (int c = 0; c < chains; ++c) {
    Rng rng(chains == 1 ? scfg.seed : Rng::derived_seed(scfg.seed, c));
    const auto t0 = std::chrono::steady_clock::now();
    const int total = scfg.burn_in + scfg.retained;
    DrawStore store = sampler.run_chain(rng, hash, [&](int done, int tot) {
      if (done % std::max(1, tot / 10) == 0 || done == tot) {
        std::cerr << "chain " << c << ": " << done << "/" << tot << " sweeps\r";
      }
    });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "\nchain " << c << ": " << total << " sweeps in " << secs << " s ("
              << total / secs << " sweeps/s)\n";
    const std::string basename = out_dir + "/chain" + std::to_string(c);
    store.save(basename);
    outputs.push_back("chain" + std::to_string(c) + ".json");
    outputs.push_back("chain" + std::to_string(c) + ".bin");
  }
  write_manifest(out_dir, "fit", hash, scfg.seed, started, {config_path, data_path}, outputs);
  return 0;
}

DrawStore open_store(const std::string& basename) {
  if (!fs::exists(basename + ".json")) throw ConfigError("no draw store at " + basename);
  return DrawStore::load(basename);
}

int cmd_effects(const std::string& store_path, const std::string& covariate, int lag,
                const std::string& out_dir) {
  const DrawStore store = open_store(store_path);
  if (!store.has_random_effects()) {
    throw ConfigError("store was written without random-effect draws");
  }
  const ModelSpec& spec = store.spec();
  int j = -1;
  for (int k = 0; k < spec.n_covariates(); ++k) {
    if (spec.covariates[k].name == covariate) j = k;
  }
  if (j < 0) throw ConfigError("unknown covariate '" + covariate + "'");
  std::vector<CountryEffectSummary> effects;
  for (int g = 0; g < spec.n_countries; ++g) {
    effects.push_back(country_effect(store, j, g, lag));
  }
  fs::create_directories(out_dir);
  export_effects_csv(effects, out_dir + "/effects_box.csv", out_dir + "/effects_density.csv",
                     store.config_hash());
  std::cerr << "wrote " << out_dir << "/effects_box.csv and effects_density.csv\n";
  return 0;
}

int cmd_volatility(const std::string& store_path, const std::string& dataset_manifest,
                   const std::string& aggregate, int hour, bool median,
                   const std::string& out_path) {
  const DrawStore store = open_store(store_path);
  if (!fs::exists(dataset_manifest)) throw ConfigError("no dataset at " + dataset_manifest);
  const PanelDataset data = load_dataset(dataset_manifest);
  const auto agg =
      aggregate == "daily" ? VolatilityAggregate::Daily : VolatilityAggregate::Hourly;
  const auto plug = median ? PlugIn::PosteriorMedian : PlugIn::PosteriorMean;
  std::vector<VolatilityPath> paths;
  for (int g = 0; g < store.spec().n_countries; ++g) {
    paths.push_back(volatility_path(store, data, g, agg, hour, plug));
  }
  export_volatility_csv(paths, out_path, store.config_hash());
  std::cerr << "wrote " << out_path << "\n";
  return 0;
}

int cmd_diagnose(const std::string& store_path, const std::string& out_path) {
  const DrawStore store = open_store(store_path);
  export_diagnostics_csv(diagnostics(store), out_path, store.config_hash());
  std::cerr << "wrote " << out_path << "\n";
  return 0;
}

int cmd_summarize(const std::string& store_path, const std::string& out_path) {
  const DrawStore store = open_store(store_path);
  const Diagnostics diag = diagnostics(store);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "# config_hash=" << store.config_hash() << " draws=" << store.n_draws() << "\n";
  out << "parameter,mean,sd\n";
  for (const auto& d : diag.params) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g", d.name.c_str(), d.mean, d.sd);
    out << buf << "\n";
  }
  std::cerr << "wrote " << out_path << " (" << diag.params.size() << " parameters)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRUMIDAS: Bayesian mixed-frequency panel estimation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string scenario_path, config_path, data_path, store_path, dataset_manifest;
  std::string out_dir = ".", out_path, from, to, covariate, aggregate = "daily";
  int chains = 1, lag = 0, hour = 0;
  bool median = false, no_effects = false, serial = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> burn_in, retained, thin;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic panel");
  sim->add_option("--scenario", scenario_path, "scenario JSON (spec, scenario, optional truth)")
      ->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "override the scenario seed");

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler");
  fit->add_option("--config", config_path, "model config JSON (spec, prior, sampler)")
      ->required();
  fit->add_option("--data", data_path, "data manifest JSON")->required();
  fit->add_option("--out", out_dir, "output directory")->required();
  fit->add_option("--from", from, "start date (YYYY-MM-DD, inclusive)");
  fit->add_option("--to", to, "end date (YYYY-MM-DD, inclusive)");
  fit->add_option("--chains", chains, "independent chains with derived seeds");
  fit->add_option("--seed", seed, "override the sampler seed");
  fit->add_option("--burn-in", burn_in, "override burn-in sweep count");
  fit->add_option("--retained", retained, "override retained draw count");
  fit->add_option("--thin", thin, "override thinning interval");
  fit->add_flag("--no-store-effects", no_effects, "store only common parameters");
  fit->add_flag("--serial", serial, "use the serial reference kernels");

  auto* eff = app.add_subcommand("effects", "country-effect tables and densities");
  eff->add_option("--store", store_path, "draw store basename")->required();
  eff->add_option("--covariate", covariate, "covariate name")->required();
  eff->add_option("--lag", lag, "covariate lag order");
  eff->add_option("--out", out_dir, "output directory")->required();

  auto* vol = app.add_subcommand("volatility", "time-varying volatility paths");
  vol->add_option("--store", store_path, "draw store basename")->required();
  vol->add_option("--data", dataset_manifest, "exported dataset manifest")->required();
  vol->add_option("--aggregate", aggregate, "daily or hourly")
      ->check(CLI::IsMember({"daily", "hourly"}));
  vol->add_option("--hour", hour, "hour for the hourly aggregate");
  vol->add_flag("--median", median, "posterior medians instead of means");
  vol->add_option("--out", out_path, "output CSV")->required();

  auto* dia = app.add_subcommand("diagnose", "ESS and Geweke diagnostics");
  dia->add_option("--store", store_path, "draw store basename")->required();
  dia->add_option("--out", out_path, "output CSV")->required();

  auto* sum = app.add_subcommand("summarize", "posterior means and sds");
  sum->add_option("--store", store_path, "draw store basename")->required();
  sum->add_option("--out", out_path, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, out_dir, seed);
    if (fit->parsed()) {
      return cmd_fit(config_path, data_path, out_dir, from, to, chains, seed, burn_in,
                     retained, thin, no_effects, serial);
    }
    if (eff->parsed()) return cmd_effects(store_path, covariate, lag, out_dir);
    if (vol->parsed()) {
      return cmd_volatility(store_path, dataset_manifest, aggregate, hour, median, out_path);
    }
    if (dia->parsed()) return cmd_diagnose(store_path, out_path);
    if (sum->parsed()) return cmd_summarize(store_path, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
