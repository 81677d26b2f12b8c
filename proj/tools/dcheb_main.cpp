#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "dc/baselines.hpp"
#include "dc/engine.hpp"
#include "dc/io_util.hpp"
#include "dc/models.hpp"
#include "dc/moments.hpp"
#include "dc/parallel.hpp"

using njson = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "dcheb 1.0.0";

struct RunConfig {
  // model
  std::string model_kind = "bs";
  double rate = 0.03;
  double sigma = 0.25;
  double jump_intensity = 0.4;
  double jump_mean = -0.5;
  double jump_std = 0.4;
  double cev_beta = 1.5;
  // grid
  int grid_n = 100;
  std::optional<double> domain_lo, domain_hi;
  // time
  double maturity = 1.0;
  std::vector<double> maturities;
  int steps_per_year = 32;
  // moments
  std::string backend = "closed_form";
  int quad_nodes = 0;
  int quad_panels = 8;
  double xi_max = 250.0;
  int cc_nodes = 500;
  std::uint64_t mc_paths = 10000;
  bool mc_paths_set = false;
  std::uint64_t seed = 1;
  bool seed_set = false;
  int n_sub = 16;
  double absorb_floor = 1e-8;
  std::string cache_path;
  // experiment
  double s0 = 100.0;
  std::vector<double> s0_grid;
  double strike = 100.0;
  std::vector<double> strikes;
  std::string out_prefix;
  std::string sidecar_path;  // --json override
  bool svg = false;
  bool tail_correction = true;
  bool first_step_smoothing = true;
  int tree_steps = 20000;
  int lsm_degree = 3;
  int threads = 0;
  // converge / bench
  std::vector<int> n_list = {50, 100, 150, 200, 250, 300};
  std::vector<std::uint64_t> m_list = {20000};
  std::vector<int> option_counts = {1, 9, 27, 108};
  std::vector<int> steps_list = {252};
  int reps = 3;

  std::vector<std::string> argv_echo;
};

// ---------------------------------------------------------------------------
// JSON config loading (strict: unknown keys are config errors)

double jnum(const njson& v, const std::string& where) {
  if (!v.is_number()) throw std::invalid_argument("config: " + where + " must be a number");
  return v.get<double>();
}

int jint(const njson& v, const std::string& where) {
  if (!v.is_number_integer())
    throw std::invalid_argument("config: " + where + " must be an integer");
  return v.get<int>();
}

std::uint64_t juint(const njson& v, const std::string& where) {
  if (!v.is_number_integer() || v.is_number_float() || v.get<long long>() < 0)
    throw std::invalid_argument("config: " + where + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string jstr(const njson& v, const std::string& where) {
  if (!v.is_string()) throw std::invalid_argument("config: " + where + " must be a string");
  return v.get<std::string>();
}

bool jbool(const njson& v, const std::string& where) {
  if (!v.is_boolean()) throw std::invalid_argument("config: " + where + " must be a boolean");
  return v.get<bool>();
}

template <typename T, typename F>
std::vector<T> jlist(const njson& v, const std::string& where, F item) {
  if (!v.is_array()) throw std::invalid_argument("config: " + where + " must be an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(item(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

void check_known_keys(const njson& obj, const std::string& block,
                      const std::set<std::string>& known) {
  for (const auto& item : obj.items())
    if (!known.count(item.key()))
      throw std::invalid_argument("config: unknown key " + block + "." + item.key());
}

void apply_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  njson doc;
  try {
    doc = njson::parse(f);
  } catch (const njson::exception& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  check_known_keys(doc, "top level",
                   {"model", "grid", "time", "moments", "experiment", "converge", "bench"});

  if (doc.contains("model")) {
    const njson& m = doc["model"];
    check_known_keys(m, "model",
                     {"kind", "rate", "sigma", "jump_intensity", "jump_mean", "jump_std",
                      "cev_beta"});
    if (m.contains("kind")) rc.model_kind = jstr(m["kind"], "model.kind");
    if (m.contains("rate")) rc.rate = jnum(m["rate"], "model.rate");
    if (m.contains("sigma")) rc.sigma = jnum(m["sigma"], "model.sigma");
    if (m.contains("jump_intensity"))
      rc.jump_intensity = jnum(m["jump_intensity"], "model.jump_intensity");
    if (m.contains("jump_mean")) rc.jump_mean = jnum(m["jump_mean"], "model.jump_mean");
    if (m.contains("jump_std")) rc.jump_std = jnum(m["jump_std"], "model.jump_std");
    if (m.contains("cev_beta")) rc.cev_beta = jnum(m["cev_beta"], "model.cev_beta");
  }
  if (doc.contains("grid")) {
    const njson& g = doc["grid"];
    check_known_keys(g, "grid", {"n", "domain_lo", "domain_hi"});
    if (g.contains("n")) rc.grid_n = jint(g["n"], "grid.n");
    if (g.contains("domain_lo")) rc.domain_lo = jnum(g["domain_lo"], "grid.domain_lo");
    if (g.contains("domain_hi")) rc.domain_hi = jnum(g["domain_hi"], "grid.domain_hi");
  }
  if (doc.contains("time")) {
    const njson& t = doc["time"];
    check_known_keys(t, "time", {"maturity", "maturities", "steps_per_year"});
    if (t.contains("maturity")) rc.maturity = jnum(t["maturity"], "time.maturity");
    if (t.contains("maturities"))
      rc.maturities = jlist<double>(t["maturities"], "time.maturities", jnum);
    if (t.contains("steps_per_year"))
      rc.steps_per_year = jint(t["steps_per_year"], "time.steps_per_year");
  }
  if (doc.contains("moments")) {
    const njson& m = doc["moments"];
    check_known_keys(m, "moments",
                     {"backend", "quad_nodes", "quad_panels", "xi_max", "cc_nodes",
                      "mc_paths", "seed", "n_sub", "absorb_floor", "cache"});
    if (m.contains("backend")) rc.backend = jstr(m["backend"], "moments.backend");
    if (m.contains("quad_nodes")) rc.quad_nodes = jint(m["quad_nodes"], "moments.quad_nodes");
    if (m.contains("quad_panels"))
      rc.quad_panels = jint(m["quad_panels"], "moments.quad_panels");
    if (m.contains("xi_max")) rc.xi_max = jnum(m["xi_max"], "moments.xi_max");
    if (m.contains("cc_nodes")) rc.cc_nodes = jint(m["cc_nodes"], "moments.cc_nodes");
    if (m.contains("mc_paths")) {
      rc.mc_paths = juint(m["mc_paths"], "moments.mc_paths");
      rc.mc_paths_set = true;
    }
    if (m.contains("seed")) {
      rc.seed = juint(m["seed"], "moments.seed");
      rc.seed_set = true;
    }
    if (m.contains("n_sub")) rc.n_sub = jint(m["n_sub"], "moments.n_sub");
    if (m.contains("absorb_floor"))
      rc.absorb_floor = jnum(m["absorb_floor"], "moments.absorb_floor");
    if (m.contains("cache")) rc.cache_path = jstr(m["cache"], "moments.cache");
  }
  if (doc.contains("experiment")) {
    const njson& e = doc["experiment"];
    check_known_keys(e, "experiment",
                     {"s0", "s0_grid", "strike", "strikes", "out_prefix", "svg",
                      "tail_correction", "first_step_smoothing", "tree_steps", "lsm_degree",
                      "threads"});
    if (e.contains("s0")) rc.s0 = jnum(e["s0"], "experiment.s0");
    if (e.contains("s0_grid"))
      rc.s0_grid = jlist<double>(e["s0_grid"], "experiment.s0_grid", jnum);
    if (e.contains("strike")) rc.strike = jnum(e["strike"], "experiment.strike");
    if (e.contains("strikes"))
      rc.strikes = jlist<double>(e["strikes"], "experiment.strikes", jnum);
    if (e.contains("out_prefix")) rc.out_prefix = jstr(e["out_prefix"], "experiment.out_prefix");
    if (e.contains("svg")) rc.svg = jbool(e["svg"], "experiment.svg");
    if (e.contains("tail_correction"))
      rc.tail_correction = jbool(e["tail_correction"], "experiment.tail_correction");
    if (e.contains("first_step_smoothing"))
      rc.first_step_smoothing =
          jbool(e["first_step_smoothing"], "experiment.first_step_smoothing");
    if (e.contains("tree_steps")) rc.tree_steps = jint(e["tree_steps"], "experiment.tree_steps");
    if (e.contains("lsm_degree")) rc.lsm_degree = jint(e["lsm_degree"], "experiment.lsm_degree");
    if (e.contains("threads")) rc.threads = jint(e["threads"], "experiment.threads");
  }
  if (doc.contains("converge")) {
    const njson& c = doc["converge"];
    check_known_keys(c, "converge", {"n_list"});
    if (c.contains("n_list")) rc.n_list = jlist<int>(c["n_list"], "converge.n_list", jint);
  }
  if (doc.contains("bench")) {
    const njson& b = doc["bench"];
    check_known_keys(b, "bench", {"m_list", "option_counts", "steps_list", "reps"});
    if (b.contains("m_list"))
      rc.m_list = jlist<std::uint64_t>(b["m_list"], "bench.m_list", juint);
    if (b.contains("option_counts"))
      rc.option_counts = jlist<int>(b["option_counts"], "bench.option_counts", jint);
    if (b.contains("steps_list"))
      rc.steps_list = jlist<int>(b["steps_list"], "bench.steps_list", jint);
    if (b.contains("reps")) rc.reps = jint(b["reps"], "bench.reps");
  }
}

// ---------------------------------------------------------------------------
// Resolution helpers

dc::ModelSpec resolve_model(const RunConfig& rc) {
  if (rc.model_kind == "bs") return dc::ModelSpec::black_scholes(rc.rate, rc.sigma);
  if (rc.model_kind == "merton")
    return dc::ModelSpec::merton(rc.rate, rc.sigma, rc.jump_intensity, rc.jump_mean,
                                 rc.jump_std);
  if (rc.model_kind == "cev") return dc::ModelSpec::cev(rc.rate, rc.sigma, rc.cev_beta);
  throw std::invalid_argument("config: unknown model kind '" + rc.model_kind +
                              "' (expected bs, merton, or cev)");
}

dc::MomentMatrixConfig resolve_moment_config(const RunConfig& rc) {
  dc::MomentMatrixConfig cfg;
  cfg.backend = dc::gamma_backend_from_string(rc.backend);
  cfg.quad_nodes = rc.quad_nodes;
  cfg.quad_panels = rc.quad_panels;
  cfg.xi_max = rc.xi_max;
  cfg.cc_nodes = rc.cc_nodes;
  cfg.mc_paths = rc.mc_paths;
  cfg.seed = rc.seed;
  cfg.sim.n_sub = rc.n_sub;
  cfg.sim.absorb_floor = rc.absorb_floor;
  if (cfg.backend == dc::GammaBackend::MonteCarlo) {
    if (!rc.seed_set)
      throw std::invalid_argument(
          "config: the Monte Carlo backend requires an explicit seed (--seed or moments.seed)");
    if (!rc.mc_paths_set)
      throw std::invalid_argument(
          "config: the Monte Carlo backend requires an explicit path count (--mc-paths or "
          "moments.mc_paths)");
  }
  return cfg;
}

dc::Domain resolve_domain(const RunConfig& rc, const dc::ModelSpec& model, double k_min,
                          double k_max, double t_max) {
  if (rc.domain_lo.has_value() != rc.domain_hi.has_value())
    throw std::invalid_argument(
        "config: domain_lo and domain_hi must be given together or not at all");
  if (rc.domain_lo) {
    if (!(*rc.domain_lo < *rc.domain_hi))
      throw std::invalid_argument("config: need domain_lo < domain_hi");
    return dc::Domain(*rc.domain_lo, *rc.domain_hi);
  }
  return dc::domain_rule(model, rc.s0, k_min, k_max, t_max);
}

int steps_for_maturity(double maturity, int steps_per_year) {
  const double n = maturity * steps_per_year;
  const long long r = std::llround(n);
  if (r < 1 || std::fabs(static_cast<double>(r) - n) > 1e-9 * std::max(1.0, n))
    throw std::invalid_argument("config: maturity " + std::to_string(maturity) +
                                " is not a positive integer multiple of 1/steps_per_year");
  return static_cast<int>(r);
}

std::string hex_fingerprint(std::uint64_t fp) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

/// Load the cache when present and consistent with the request; build (and
/// save, when a path is configured) otherwise. A stale cache is rejected and
/// rebuilt with a note on stderr.
dc::MomentMatrix obtain_gamma(const RunConfig& rc, const dc::ModelSpec& model,
                             const dc::ChebGrid& grid, double dt,
                             const dc::MomentMatrixConfig& cfg, bool* loaded) {
  *loaded = false;
  if (!rc.cache_path.empty() && std::ifstream(rc.cache_path).good()) {
    try {
      dc::MomentMatrix m = dc::load_cache(rc.cache_path, model, grid, dt, cfg);
      *loaded = true;
      return m;
    } catch (const std::runtime_error& e) {
      std::cerr << "note: cache " << rc.cache_path << " rejected (" << e.what()
                << "); rebuilding\n";
    }
  }
  dc::MomentMatrix m = dc::build_moment_matrix(model, grid, dt, cfg);
  if (!rc.cache_path.empty()) dc::save_cache(m, rc.cache_path);
  return m;
}

// ---------------------------------------------------------------------------
// Sidecar

njson config_echo(const RunConfig& rc, const dc::Domain& dom, bool domain_from_rule) {
  njson j;
  j["model"] = {{"kind", rc.model_kind}, {"rate", rc.rate}, {"sigma", rc.sigma}};
  if (rc.model_kind == "merton") {
    j["model"]["jump_intensity"] = rc.jump_intensity;
    j["model"]["jump_mean"] = rc.jump_mean;
    j["model"]["jump_std"] = rc.jump_std;
  }
  if (rc.model_kind == "cev") j["model"]["cev_beta"] = rc.cev_beta;
  j["grid"] = {{"n", rc.grid_n},
               {"domain_lo", dom.lo[0]},
               {"domain_hi", dom.hi[0]},
               {"domain_source", domain_from_rule ? "rule" : "override"}};
  j["time"] = {{"steps_per_year", rc.steps_per_year}};
  j["moments"] = {{"backend", rc.backend}};
  const dc::GammaBackend b = dc::gamma_backend_from_string(rc.backend);
  if (b == dc::GammaBackend::Quadrature || b == dc::GammaBackend::ClosedForm) {
    j["moments"]["quad_nodes"] = rc.quad_nodes;
    j["moments"]["quad_panels"] = rc.quad_panels;
  }
  if (b == dc::GammaBackend::Fourier) {
    j["moments"]["xi_max"] = rc.xi_max;
    j["moments"]["cc_nodes"] = rc.cc_nodes;
  }
  if (b == dc::GammaBackend::MonteCarlo) {
    j["moments"]["mc_paths"] = rc.mc_paths;
    j["moments"]["seed"] = rc.seed;
    j["moments"]["n_sub"] = rc.n_sub;
    j["moments"]["absorb_floor"] = rc.absorb_floor;
  }
  if (!rc.cache_path.empty()) j["moments"]["cache"] = rc.cache_path;
  j["experiment"] = {{"tail_correction", rc.tail_correction},
                     {"first_step_smoothing", rc.first_step_smoothing},
                     {"threads", rc.threads}};
  return j;
}

njson sidecar_skeleton(const std::string& command, const RunConfig& rc) {
  njson j;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["argv"] = rc.argv_echo;
  j["build"] = njson::object();
  j["build"]["compiler"] = __VERSION__;
#ifdef _OPENMP
  j["build"]["openmp"] = _OPENMP;
#else
  j["build"]["openmp"] = false;
#endif
  return j;
}

void write_sidecar(const RunConfig& rc, const std::string& default_prefix, const njson& j) {
  const std::string path = !rc.sidecar_path.empty()
                               ? rc.sidecar_path
                               : (rc.out_prefix.empty() ? default_prefix : rc.out_prefix) +
                                     ".meta.json";
  dc::write_text_file(path, j.dump(2) + "\n");
  std::cout << "metadata " << path << "\n";
}

std::string out_base(const RunConfig& rc, const std::string& default_prefix) {
  return rc.out_prefix.empty() ? default_prefix : rc.out_prefix;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_moments(RunConfig& rc) {
  if (rc.cache_path.empty())
    throw std::invalid_argument("config: the moments command needs a cache path (--cache)");
  const dc::ModelSpec model = resolve_model(rc);
  const dc::MomentMatrixConfig cfg = resolve_moment_config(rc);
  double k_min = rc.strike, k_max = rc.strike;
  for (double k : rc.strikes) {
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }
  double t_max = rc.maturity;
  for (double t : rc.maturities) t_max = std::max(t_max, t);
  const dc::Domain dom = resolve_domain(rc, model, k_min, k_max, t_max);
  const dc::ChebGrid grid = dc::build_grid(dom, rc.grid_n);
  const double dt = 1.0 / rc.steps_per_year;

  dc::MomentMatrix m = dc::build_moment_matrix(model, grid, dt, cfg);
  dc::save_cache(m, rc.cache_path);

  std::cout << "moment matrix: N=" << m.n() << " dt=1/" << rc.steps_per_year << " domain=["
            << dom.lo[0] << ", " << dom.hi[0] << "] backend=" << m.backend_tag << "\n";
  std::cout << "fingerprint " << hex_fingerprint(m.fingerprint()) << "\n";
  std::cout << "offline " << m.offline_seconds << " s\n";
  std::cout << "cache " << rc.cache_path << "\n";

  njson j = sidecar_skeleton("moments", rc);
  j["config"] = config_echo(rc, dom, !rc.domain_lo);
  j["results"] = {{"fingerprint", hex_fingerprint(m.fingerprint())},
                  {"backend_tag", m.backend_tag},
                  {"offline_seconds", m.offline_seconds},
                  {"cache_file", rc.cache_path}};
  write_sidecar(rc, "dcheb_moments", j);
  return 0;
}

int cmd_price(RunConfig& rc) {
  const dc::ModelSpec model = resolve_model(rc);
  const dc::MomentMatrixConfig cfg = resolve_moment_config(rc);
  const int n_steps = steps_for_maturity(rc.maturity, rc.steps_per_year);
  const dc::Domain dom = resolve_domain(rc, model, rc.strike, rc.strike, rc.maturity);
  const dc::ChebGrid grid = dc::build_grid(dom, rc.grid_n);
  const double dt = 1.0 / rc.steps_per_year;

  bool loaded = false;
  dc::MomentMatrix m = obtain_gamma(rc, model, grid, dt, cfg, &loaded);

  dc::AmericanPutFlags flags;
  flags.use_tail_correction = rc.tail_correction;
  flags.use_first_step_smoothing = rc.first_step_smoothing;
  const dc::AmericanPutResult r =
      dc::american_put(m, model, rc.strike, rc.maturity, n_steps, {rc.s0}, flags);

  std::cout << "model=" << rc.model_kind << " backend=" << m.backend_tag << " N=" << m.n()
            << " n_steps=" << n_steps << " domain=[" << dom.lo[0] << ", " << dom.hi[0]
            << "]\n";
  std::cout << "fingerprint " << hex_fingerprint(m.fingerprint())
            << (loaded ? " (cache hit)" : "") << "\n";
  std::cout << "S0=" << rc.s0 << " K=" << rc.strike << " T=" << rc.maturity << "\n";
  std::cout << "price " << dc::format_double(r.quotes[0].price) << "\n";
  std::cout << "delta " << dc::format_double(r.quotes[0].delta) << "\n";
  std::cout << "gamma " << dc::format_double(r.quotes[0].gamma) << "\n";
  std::cout << "offline " << m.offline_seconds << " s, online " << r.online_seconds
            << " s\n";

  njson j = sidecar_skeleton("price", rc);
  j["config"] = config_echo(rc, dom, !rc.domain_lo);
  j["config"]["experiment"]["s0"] = rc.s0;
  j["config"]["experiment"]["strike"] = rc.strike;
  j["config"]["experiment"]["maturity"] = rc.maturity;
  j["results"] = {{"price", r.quotes[0].price},
                  {"delta", r.quotes[0].delta},
                  {"gamma", r.quotes[0].gamma},
                  {"tail_applied", r.tail_applied},
                  {"smoothing_applied", r.smoothing_applied},
                  {"tail_magnitude", r.tail_magnitude},
                  {"fingerprint", hex_fingerprint(m.fingerprint())},
                  {"loaded_from_cache", loaded},
                  {"offline_seconds", m.offline_seconds},
                  {"online_seconds", r.online_seconds}};
  write_sidecar(rc, "dcheb_price", j);
  return 0;
}

int cmd_surface(RunConfig& rc) {
  const dc::ModelSpec model = resolve_model(rc);
  const dc::MomentMatrixConfig cfg = resolve_moment_config(rc);
  if (rc.strikes.empty())
    throw std::invalid_argument("config: the surface command needs a strike list (--strikes)");
  if (rc.maturities.empty())
    throw std::invalid_argument(
        "config: the surface command needs a maturity list (--maturities)");
  const double k_min = *std::min_element(rc.strikes.begin(), rc.strikes.end());
  const double k_max = *std::max_element(rc.strikes.begin(), rc.strikes.end());
  const double t_max = *std::max_element(rc.maturities.begin(), rc.maturities.end());
  for (double t : rc.maturities) steps_for_maturity(t, rc.steps_per_year);
  const dc::Domain dom = resolve_domain(rc, model, k_min, k_max, t_max);
  const dc::ChebGrid grid = dc::build_grid(dom, rc.grid_n);
  const double dt = 1.0 / rc.steps_per_year;

  bool loaded = false;
  dc::MomentMatrix m = obtain_gamma(rc, model, grid, dt, cfg, &loaded);

  dc::AmericanPutFlags flags;
  flags.use_tail_correction = rc.tail_correction;
  flags.use_first_step_smoothing = rc.first_step_smoothing;
  const dc::PriceSurface surf =
      dc::price_surface(m, model, rc.strikes, rc.maturities, rc.steps_per_year, rc.s0, flags);

  const std::string base = out_base(rc, "dcheb_surface");
  dc::CsvWriter csv({"strike", "maturity", "price", "delta", "gamma"});
  for (std::size_t si = 0; si < rc.strikes.size(); ++si)
    for (std::size_t ti = 0; ti < rc.maturities.size(); ++ti) {
      const dc::SurfaceCell& c = surf.at(si, ti);
      csv.add_row({dc::format_double(rc.strikes[si]), dc::format_double(rc.maturities[ti]),
                   dc::format_double(c.price), dc::format_double(c.delta),
                   dc::format_double(c.gamma)});
    }
  csv.write(base + ".csv");
  std::cout << "surface " << rc.strikes.size() << " x " << rc.maturities.size() << " -> "
            << base << ".csv\n";
  std::cout << "offline " << surf.offline_seconds << " s, online " << surf.online_seconds
            << " s\n";

  if (rc.svg) {
    std::vector<dc::SvgSeries> series;
    for (std::size_t si = 0; si < rc.strikes.size(); ++si) {
      dc::SvgSeries s;
      s.label = "K=" + dc::format_double(rc.strikes[si]);
      for (std::size_t ti = 0; ti < rc.maturities.size(); ++ti) {
        s.x.push_back(rc.maturities[ti]);
        s.y.push_back(surf.at(si, ti).price);
      }
      series.push_back(std::move(s));
    }
    dc::write_text_file(base + ".svg",
                        dc::svg_line_chart("American put surface, S0 = " +
                                               dc::format_double(rc.s0),
                                           "maturity (years)", "price", series));
    std::cout << "chart " << base << ".svg\n";
  }

  njson j = sidecar_skeleton("surface", rc);
  j["config"] = config_echo(rc, dom, !rc.domain_lo);
  j["config"]["experiment"]["s0"] = rc.s0;
  j["config"]["experiment"]["strikes"] = rc.strikes;
  j["config"]["time"]["maturities"] = rc.maturities;
  j["results"] = {{"fingerprint", hex_fingerprint(m.fingerprint())},
                  {"loaded_from_cache", loaded},
                  {"backend_tag", surf.backend_tag},
                  {"tail_applied", surf.tail_applied},
                  {"smoothing_applied", surf.smoothing_applied},
                  {"tail_magnitude", surf.tail_magnitude},
                  {"offline_seconds", surf.offline_seconds},
                  {"online_seconds", surf.online_seconds},
                  {"csv", base + ".csv"}};
  write_sidecar(rc, "dcheb_surface", j);
  return 0;
}

int cmd_converge(RunConfig& rc) {
  const dc::ModelSpec model = resolve_model(rc);
  const dc::MomentMatrixConfig cfg = resolve_moment_config(rc);
  if (rc.n_list.empty())
    throw std::invalid_argument("config: the converge command needs a nonempty N list");
  const int n_steps = steps_for_maturity(rc.maturity, rc.steps_per_year);
  std::vector<double> s0s = rc.s0_grid;
  if (s0s.empty())
    for (int i = 0; i <= 16; ++i) s0s.push_back(rc.strike * (0.60 + 0.05 * i));
  const dc::Domain dom = resolve_domain(rc, model, rc.strike, rc.strike, rc.maturity);
  const double dt = 1.0 / rc.steps_per_year;

  // Tree oracles, shared by every N: price plus central bumps for delta and
  // gamma. Exercise dates are aligned with the n_steps Bermudan grid.
  const int ee = std::max(1, rc.tree_steps / n_steps);
  const int tree_n = ee * n_steps;
  if (model.kind == dc::ModelSpec::Kind::CEV)
    throw std::invalid_argument(
        "config: the converge command's tree oracle does not support the CEV model");
  std::cout << "oracle: binomial tree, " << tree_n << " steps, exercise every " << ee
            << "th step, " << s0s.size() << " spots\n";
  std::vector<double> o_price(s0s.size()), o_delta(s0s.size()), o_gamma(s0s.size());
  for (std::size_t i = 0; i < s0s.size(); ++i) {
    const double h = 0.005 * s0s[i];
    const double pm = dc::binomial_american_put(s0s[i] - h, rc.strike, model.rate,
                                                model.sigma, rc.maturity, tree_n, ee);
    const double p0 = dc::binomial_american_put(s0s[i], rc.strike, model.rate, model.sigma,
                                                rc.maturity, tree_n, ee);
    const double pp = dc::binomial_american_put(s0s[i] + h, rc.strike, model.rate,
                                                model.sigma, rc.maturity, tree_n, ee);
    o_price[i] = p0;
    o_delta[i] = (pp - pm) / (2.0 * h);
    o_gamma[i] = (pp - 2.0 * p0 + pm) / (h * h);
  }

  dc::AmericanPutFlags flags;
  flags.use_tail_correction = rc.tail_correction;
  flags.use_first_step_smoothing = rc.first_step_smoothing;

  dc::CsvWriter csv({"N", "err_price", "err_delta", "err_gamma", "t_offline_s", "t_online_s"});
  std::vector<double> ns, ep, ed, eg;
  for (int n : rc.n_list) {
    const dc::ChebGrid grid = dc::build_grid(dom, n);
    dc::MomentMatrix m = dc::build_moment_matrix(model, grid, dt, cfg);
    const dc::AmericanPutResult r =
        dc::american_put(m, model, rc.strike, rc.maturity, n_steps, s0s, flags);
    double e_p = 0.0, e_d = 0.0, e_g = 0.0;
    for (std::size_t i = 0; i < s0s.size(); ++i) {
      e_p = std::max(e_p, std::fabs(r.quotes[i].price - o_price[i]));
      e_d = std::max(e_d, std::fabs(r.quotes[i].delta - o_delta[i]));
      e_g = std::max(e_g, std::fabs(r.quotes[i].gamma - o_gamma[i]));
    }
    csv.add_row({std::to_string(n), dc::format_double(e_p), dc::format_double(e_d),
                 dc::format_double(e_g), dc::format_double(m.offline_seconds),
                 dc::format_double(r.online_seconds)});
    ns.push_back(n);
    ep.push_back(e_p);
    ed.push_back(e_d);
    eg.push_back(e_g);
    std::cout << "N=" << n << " err_price=" << e_p << " err_delta=" << e_d
              << " err_gamma=" << e_g << " offline=" << m.offline_seconds
              << "s online=" << r.online_seconds << "s\n";
  }

  const std::string base = out_base(rc, "dcheb_converge");
  csv.write(base + ".csv");
  std::cout << "wrote " << base << ".csv\n";
  if (rc.svg) {
    dc::write_text_file(
        base + ".svg",
        dc::svg_line_chart("Convergence vs tree oracle", "N", "max abs error",
                           {{"price", ns, ep}, {"delta", ns, ed}, {"gamma", ns, eg}}, false,
                           true));
    std::cout << "chart " << base << ".svg\n";
  }

  njson j = sidecar_skeleton("converge", rc);
  j["config"] = config_echo(rc, dom, !rc.domain_lo);
  j["config"]["experiment"]["strike"] = rc.strike;
  j["config"]["experiment"]["maturity"] = rc.maturity;
  j["config"]["experiment"]["s0_grid"] = s0s;
  j["config"]["experiment"]["tree_steps"] = tree_n;
  j["config"]["experiment"]["tree_exercise_every"] = ee;
  j["config"]["converge"] = {{"n_list", rc.n_list}};
  j["results"] = {{"csv", base + ".csv"}};
  write_sidecar(rc, "dcheb_converge", j);
  return 0;
}

double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

int cmd_bench(RunConfig& rc) {
  const dc::ModelSpec model = resolve_model(rc);
  if (rc.m_list.empty() || rc.option_counts.empty() || rc.steps_list.empty())
    throw std::invalid_argument(
        "config: the bench-lsm command needs nonempty m_list, option_counts, steps_list");
  if (rc.reps < 1) throw std::invalid_argument("config: bench reps must be >= 1");
  if (!rc.seed_set)
    throw std::invalid_argument(
        "config: the bench-lsm command requires an explicit seed (--seed or moments.seed)");

  std::vector<double> strikes = rc.strikes;
  if (strikes.empty())
    for (int i = 0; i < 9; ++i) strikes.push_back(80.0 + 5.0 * i);
  std::vector<double> mats = rc.maturities;
  if (mats.empty())
    for (int i = 1; i <= 12; ++i) mats.push_back(i / 12.0);
  std::sort(strikes.begin(), strikes.end());
  std::sort(mats.begin(), mats.end());

  // Option subsets: counts factor as (k strikes) x (m maturities); both picks
  // are evenly spaced through the full lists and include the last entry, so
  // every subset prices out to the longest maturity.
  auto pick = [](const std::vector<double>& all, int want) {
    std::vector<std::size_t> idx;
    for (int i = 0; i < want; ++i) {
      const std::size_t cand =
          (static_cast<std::size_t>(i) + 1) * all.size() / static_cast<std::size_t>(want);
      idx.push_back(cand == 0 ? 0 : cand - 1);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  };
  auto factor_count = [&](int c) {
    const int mt_max = static_cast<int>(mats.size());
    const int ks_max = static_cast<int>(strikes.size());
    for (int k = (c + mt_max - 1) / mt_max; k <= ks_max; ++k)
      if (c % k == 0 && c / k <= mt_max) return std::pair<int, int>(k, c / k);
    throw std::invalid_argument(
        "config: option count " + std::to_string(c) + " does not factor as (strikes <= " +
        std::to_string(ks_max) + ") x (maturities <= " + std::to_string(mt_max) + ")");
  };

  const double k_min = strikes.front(), k_max = strikes.back();
  const double t_max = mats.back();

  dc::AmericanPutFlags flags;
  flags.use_tail_correction = rc.tail_correction;
  flags.use_first_step_smoothing = rc.first_step_smoothing;
  const std::uint64_t lsm_seed = rc.seed + 1001;

  dc::CsvWriter csv({"m_paths", "n_options", "steps_per_year", "grid_n", "dc_offline_s",
                     "dc_online_s", "dc_total_s", "lsm_sim_s", "lsm_online_s", "lsm_total_s",
                     "max_abs_diff", "mean_abs_diff", "max_lsm_se"});
  njson rows = njson::array();

  for (int spy : rc.steps_list) {
    for (double t : mats) steps_for_maturity(t, spy);
    const double dt = 1.0 / spy;
    for (std::uint64_t mth : rc.m_list) {
      const int n_grid = static_cast<int>(
          std::ceil(std::sqrt(2.0 * static_cast<double>(mth))));
      RunConfig rcn = rc;
      rcn.grid_n = n_grid;
      const dc::Domain dom = resolve_domain(rcn, model, k_min, k_max, t_max);
      const dc::ChebGrid grid = dc::build_grid(dom, n_grid);
      dc::MomentMatrixConfig cfg = resolve_moment_config(rc);
      cfg.mc_paths = mth;

      for (int count : rc.option_counts) {
        const auto [n_k, n_t] = factor_count(count);
        std::vector<double> sub_k, sub_t;
        for (std::size_t i : pick(strikes, n_k)) sub_k.push_back(strikes[i]);
        for (std::size_t i : pick(mats, n_t)) sub_t.push_back(mats[i]);

        std::vector<double> dc_off(rc.reps), dc_on(rc.reps), ls_sim(rc.reps),
            ls_on(rc.reps);
        dc::PriceSurface surf;
        std::vector<double> lsm_prices, lsm_ses;
        for (int rep = 0; rep < rc.reps; ++rep) {
          dc::MomentMatrix m = dc::build_moment_matrix(model, grid, dt, cfg);
          dc::PriceSurface s = dc::price_surface(m, model, sub_k, sub_t, spy, rc.s0, flags);
          dc_off[rep] = m.offline_seconds;
          dc_on[rep] = s.online_seconds;

          const auto t0 = std::chrono::steady_clock::now();
          dc::PathMatrix paths = dc::simulate_paths(
              model, rc.s0, t_max, steps_for_maturity(t_max, spy),
              static_cast<std::size_t>(mth), lsm_seed, cfg.sim);
          const auto t1 = std::chrono::steady_clock::now();
          std::vector<double> prices, ses;
          for (double kk : sub_k)
            for (double tt : sub_t) {
              const dc::PathMatrix sliced =
                  dc::truncate_paths(paths, steps_for_maturity(tt, spy));
              const dc::LsmResult l = dc::lsm_price(sliced, kk, model.rate, rc.lsm_degree);
              prices.push_back(l.price);
              ses.push_back(l.std_error);
            }
          const auto t2 = std::chrono::steady_clock::now();
          ls_sim[rep] = std::chrono::duration<double>(t1 - t0).count();
          ls_on[rep] = std::chrono::duration<double>(t2 - t1).count();
          if (rep == 0) {
            surf = std::move(s);
            lsm_prices = std::move(prices);
            lsm_ses = std::move(ses);
          }
        }

        double max_diff = 0.0, sum_diff = 0.0, max_se = 0.0;
        std::size_t idx = 0;
        for (std::size_t si = 0; si < sub_k.size(); ++si)
          for (std::size_t ti = 0; ti < sub_t.size(); ++ti, ++idx) {
            const double d = std::fabs(surf.at(si, ti).price - lsm_prices[idx]);
            max_diff = std::max(max_diff, d);
            sum_diff += d;
            max_se = std::max(max_se, lsm_ses[idx]);
          }
        const double n_opts = static_cast<double>(sub_k.size() * sub_t.size());

        auto med = [&](const std::vector<double>& v) {
          if (v.size() >= 3) return median3(v[0], v[1], v[2]);
          return v.size() == 2 ? 0.5 * (v[0] + v[1]) : v[0];
        };
        const double dco = med(dc_off), dcn = med(dc_on), lss = med(ls_sim),
                     lsn = med(ls_on);
        csv.add_row({std::to_string(mth), std::to_string(count), std::to_string(spy),
                     std::to_string(n_grid), dc::format_double(dco), dc::format_double(dcn),
                     dc::format_double(dco + dcn), dc::format_double(lss),
                     dc::format_double(lsn), dc::format_double(lss + lsn),
                     dc::format_double(max_diff), dc::format_double(sum_diff / n_opts),
                     dc::format_double(max_se)});
        rows.push_back({{"m_paths", mth},
                        {"n_options", count},
                        {"strikes", sub_k},
                        {"maturities", sub_t},
                        {"dc_total_s", dco + dcn},
                        {"lsm_total_s", lss + lsn}});
        std::cout << "M=" << mth << " options=" << count << " spy=" << spy << " N=" << n_grid
                  << "  DC " << dco + dcn << "s (offline " << dco << ")  LSM " << lss + lsn
                  << "s  maxdiff=" << max_diff << "\n";
      }
    }
  }

  const std::string base = out_base(rc, "dcheb_bench_lsm");
  csv.write(base + ".csv");
  std::cout << "wrote " << base << ".csv\n";

  njson j = sidecar_skeleton("bench-lsm", rc);
  {
    RunConfig rc_echo = rc;
    const dc::Domain dom = resolve_domain(rc_echo, model, k_min, k_max, t_max);
    j["config"] = config_echo(rc, dom, !rc.domain_lo);
  }
  j["config"]["experiment"]["s0"] = rc.s0;
  j["config"]["experiment"]["strikes"] = strikes;
  j["config"]["time"]["maturities"] = mats;
  j["config"]["bench"] = {{"m_list", rc.m_list},
                          {"option_counts", rc.option_counts},
                          {"steps_list", rc.steps_list},
                          {"reps", rc.reps},
                          {"lsm_seed", lsm_seed},
                          {"lsm_degree", rc.lsm_degree},
                          {"grid_rule", "N = ceil(sqrt(2 M))"}};
  j["results"] = {{"csv", base + ".csv"}, {"rows", rows}};
  write_sidecar(rc, "dcheb_bench_lsm", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  for (int i = 0; i < argc; ++i) rc.argv_echo.push_back(argv[i]);

  CLI::App app{"Bermudan/American option pricing via dynamic Chebyshev interpolation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");

  // Every value flag mirrors a config key.
  double r_flag = 0, sigma_flag = 0, ji_flag = 0, jm_flag = 0, js_flag = 0, beta_flag = 0;
  double dlo_flag = 0, dhi_flag = 0, mat_flag = 0, xi_flag = 0, af_flag = 0;
  double s0_flag = 0, k_flag = 0;
  std::string model_flag, backend_flag, cache_flag, out_flag, json_flag;
  int n_flag = 0, spy_flag = 0, qn_flag = 0, qp_flag = 0, cc_flag = 0, nsub_flag = 0;
  int tree_flag = 0, deg_flag = 0, thr_flag = 0, reps_flag = 0;
  std::uint64_t mc_flag = 0, seed_flag = 0;
  std::vector<double> mats_flag, s0g_flag, ks_flag;
  std::vector<int> nlist_flag, counts_flag, steps_list_flag;
  std::vector<std::uint64_t> mlist_flag;
  bool svg_flag = false, no_tail = false, no_smooth = false;

  app.add_option("--model", model_flag, "model kind: bs, merton, cev");
  app.add_option("--r", r_flag, "risk-free rate");
  app.add_option("--sigma", sigma_flag, "diffusion volatility");
  app.add_option("--jump-intensity", ji_flag, "Merton jump intensity");
  app.add_option("--jump-mean", jm_flag, "Merton jump mean");
  app.add_option("--jump-std", js_flag, "Merton jump standard deviation");
  app.add_option("--cev-beta", beta_flag, "CEV elasticity");
  app.add_option("--grid-n", n_flag, "Chebyshev degree N");
  app.add_option("--domain-lo", dlo_flag, "log-price domain lower end (with --domain-hi)");
  app.add_option("--domain-hi", dhi_flag, "log-price domain upper end (with --domain-lo)");
  app.add_option("--maturity", mat_flag, "maturity in years");
  app.add_option("--maturities", mats_flag, "maturity list")->delimiter(',');
  app.add_option("--steps", spy_flag, "exercise steps per year");
  app.add_option("--backend", backend_flag,
                 "moment backend: closed_form, quadrature, fourier, mc");
  app.add_option("--quad-nodes", qn_flag, "total quadrature nodes (0 = automatic)");
  app.add_option("--quad-panels", qp_flag, "quadrature panels");
  app.add_option("--xi-max", xi_flag, "Fourier truncation bound");
  app.add_option("--cc-nodes", cc_flag, "Fourier Clenshaw-Curtis node count");
  app.add_option("--mc-paths", mc_flag, "Monte Carlo paths per node");
  app.add_option("--seed", seed_flag, "random seed");
  app.add_option("--n-sub", nsub_flag, "CEV Euler substeps per exercise step");
  app.add_option("--absorb-floor", af_flag, "CEV absorption level");
  app.add_option("--cache", cache_flag, "moment matrix cache file");
  app.add_option("--s0", s0_flag, "spot");
  app.add_option("--s0-grid", s0g_flag, "spot list for error sweeps")->delimiter(',');
  app.add_option("--strike", k_flag, "strike");
  app.add_option("--strikes", ks_flag, "strike list")->delimiter(',');
  app.add_option("--out", out_flag, "output file prefix");
  app.add_option("--json", json_flag, "metadata sidecar path (default <out>.meta.json)");
  app.add_flag("--svg", svg_flag, "also write an SVG chart");
  app.add_flag("--no-tail", no_tail, "disable the tail correction");
  app.add_flag("--no-smoothing", no_smooth, "disable first-step smoothing");
  app.add_option("--tree-steps", tree_flag, "binomial oracle steps");
  app.add_option("--lsm-degree", deg_flag, "LSM regression basis degree");
  app.add_option("--threads", thr_flag, "cap worker threads (results unchanged)");
  app.add_option("--n-list", nlist_flag, "N values for converge")->delimiter(',');
  app.add_option("--m-list", mlist_flag, "path counts for bench-lsm")->delimiter(',');
  app.add_option("--option-counts", counts_flag, "option counts for bench-lsm")
      ->delimiter(',');
  app.add_option("--steps-list", steps_list_flag, "steps-per-year values for bench-lsm")
      ->delimiter(',');
  app.add_option("--reps", reps_flag, "benchmark repetitions (median reported)");

  CLI::App* sub_moments = app.add_subcommand("moments", "precompute and cache a moment matrix");
  CLI::App* sub_price = app.add_subcommand("price", "price one American put");
  CLI::App* sub_surface = app.add_subcommand("surface", "price a strike/maturity surface");
  CLI::App* sub_converge = app.add_subcommand("converge", "error vs N study against a tree");
  CLI::App* sub_bench = app.add_subcommand("bench-lsm", "runtime/accuracy comparison vs LSM");
  for (CLI::App* s : {sub_moments, sub_price, sub_surface, sub_converge, sub_bench})
    s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (!config_path.empty()) apply_config_file(rc, config_path);

    if (app.count("--model")) rc.model_kind = model_flag;
    if (app.count("--r")) rc.rate = r_flag;
    if (app.count("--sigma")) rc.sigma = sigma_flag;
    if (app.count("--jump-intensity")) rc.jump_intensity = ji_flag;
    if (app.count("--jump-mean")) rc.jump_mean = jm_flag;
    if (app.count("--jump-std")) rc.jump_std = js_flag;
    if (app.count("--cev-beta")) rc.cev_beta = beta_flag;
    if (app.count("--grid-n")) rc.grid_n = n_flag;
    if (app.count("--domain-lo")) rc.domain_lo = dlo_flag;
    if (app.count("--domain-hi")) rc.domain_hi = dhi_flag;
    if (app.count("--maturity")) rc.maturity = mat_flag;
    if (app.count("--maturities")) rc.maturities = mats_flag;
    if (app.count("--steps")) rc.steps_per_year = spy_flag;
    if (app.count("--backend")) rc.backend = backend_flag;
    if (app.count("--quad-nodes")) rc.quad_nodes = qn_flag;
    if (app.count("--quad-panels")) rc.quad_panels = qp_flag;
    if (app.count("--xi-max")) rc.xi_max = xi_flag;
    if (app.count("--cc-nodes")) rc.cc_nodes = cc_flag;
    if (app.count("--mc-paths")) {
      rc.mc_paths = mc_flag;
      rc.mc_paths_set = true;
    }
    if (app.count("--seed")) {
      rc.seed = seed_flag;
      rc.seed_set = true;
    }
    if (app.count("--n-sub")) rc.n_sub = nsub_flag;
    if (app.count("--absorb-floor")) rc.absorb_floor = af_flag;
    if (app.count("--cache")) rc.cache_path = cache_flag;
    if (app.count("--s0")) rc.s0 = s0_flag;
    if (app.count("--s0-grid")) rc.s0_grid = s0g_flag;
    if (app.count("--strike")) rc.strike = k_flag;
    if (app.count("--strikes")) rc.strikes = ks_flag;
    if (app.count("--out")) rc.out_prefix = out_flag;
    if (app.count("--json")) rc.sidecar_path = json_flag;
    if (svg_flag) rc.svg = true;
    if (no_tail) rc.tail_correction = false;
    if (no_smooth) rc.first_step_smoothing = false;
    if (app.count("--tree-steps")) rc.tree_steps = tree_flag;
    if (app.count("--lsm-degree")) rc.lsm_degree = deg_flag;
    if (app.count("--threads")) rc.threads = thr_flag;
    if (app.count("--n-list")) rc.n_list = nlist_flag;
    if (app.count("--m-list")) rc.m_list = mlist_flag;
    if (app.count("--option-counts")) rc.option_counts = counts_flag;
    if (app.count("--steps-list")) rc.steps_list = steps_list_flag;
    if (app.count("--reps")) rc.reps = reps_flag;

    if (rc.threads < 0) throw std::invalid_argument("config: threads must be >= 0");
#ifdef _OPENMP
    if (rc.threads > 0) omp_set_num_threads(rc.threads);
#endif

    if (sub_moments->parsed()) return cmd_moments(rc);
    if (sub_price->parsed()) return cmd_price(rc);
    if (sub_surface->parsed()) return cmd_surface(rc);
    if (sub_converge->parsed()) return cmd_converge(rc);
    if (sub_bench->parsed()) return cmd_bench(rc);
    std::cerr << "config error: no subcommand given\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}
