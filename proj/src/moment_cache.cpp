#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "dc/moments.hpp"

namespace dc {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'M', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is)
    throw std::runtime_error(std::string("load_cache: truncated file while reading ") + what);
  return v;
}

void put_vec(std::ofstream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_vec(std::ifstream& is, std::vector<double>& v, const char* what) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is)
    throw std::runtime_error(std::string("load_cache: truncated file while reading ") + what);
}

int resolved_quad_nodes(const MomentMatrixConfig& cfg, int degree) {
  return cfg.quad_nodes == 0 ? 4 * (degree + 1) : cfg.quad_nodes;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_vec(std::uint64_t h, const std::vector<double>& v) {
  return fnv1a(h, v.data(), v.size() * sizeof(double));
}

/// Checksum over every payload byte (the header is guarded by the fingerprint).
std::uint64_t payload_checksum(const MomentMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = hash_vec(h, m.gamma);
  h = hash_vec(h, m.tail_q);
  h = hash_vec(h, m.tail_w);
  for (const auto& [strike, values] : m.tail_by_strike) {
    h = fnv1a(h, &strike, sizeof(strike));
    h = hash_vec(h, values);
  }
  return h;
}

}  // namespace

void save_cache(const MomentMatrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_cache: cannot open '" + path + "' for writing");

  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, m.fingerprint());

  put(os, static_cast<std::uint32_t>(m.model.kind));
  put(os, m.model.rate);
  put(os, m.model.sigma);
  put(os, m.model.jump_intensity);
  put(os, m.model.jump_mean);
  put(os, m.model.jump_std);
  put(os, m.model.cev_beta);

  put(os, m.grid.domain.lo[0]);
  put(os, m.grid.domain.hi[0]);
  put(os, static_cast<std::uint32_t>(m.grid.degree[0]));
  put(os, m.dt);

  put(os, static_cast<std::uint32_t>(m.backend_tag.size()));
  os.write(m.backend_tag.data(), static_cast<std::streamsize>(m.backend_tag.size()));

  put(os, static_cast<std::uint32_t>(m.config.backend));
  put(os, static_cast<std::int32_t>(m.config.quad_nodes));
  put(os, static_cast<std::int32_t>(m.config.quad_panels));
  put(os, m.config.xi_max);
  put(os, static_cast<std::int32_t>(m.config.cc_nodes));
  put(os, static_cast<std::uint64_t>(m.config.mc_paths));
  put(os, static_cast<std::uint64_t>(m.config.seed));
  put(os, static_cast<std::int32_t>(m.config.sim.n_sub));
  put(os, m.config.sim.absorb_floor);

  put_vec(os, m.gamma);
  put_vec(os, m.tail_q);
  put_vec(os, m.tail_w);

  put(os, static_cast<std::uint32_t>(m.tail_by_strike.size()));
  for (const auto& [strike, values] : m.tail_by_strike) {
    put(os, strike);
    put_vec(os, values);
  }
  put(os, payload_checksum(m));

  if (!os) throw std::runtime_error("save_cache: write to '" + path + "' failed");
}

MomentMatrix load_cache(const std::string& path, const ModelSpec& expect_model,
                        const ChebGrid& expect_grid, double expect_dt,
                        const MomentMatrixConfig& expect_cfg) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_cache: cannot open '" + path + "'");

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_cache: '" + path + "' is not a moment cache file");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kVersion)
    throw std::runtime_error("load_cache: unsupported cache version " +
                             std::to_string(version));

  const auto stored_fp = get<std::uint64_t>(is, "fingerprint");

  const auto kind_raw = get<std::uint32_t>(is, "model kind");
  if (kind_raw > 2) throw std::runtime_error("load_cache: corrupt model kind field");
  ModelSpec model;
  model.kind = static_cast<ModelSpec::Kind>(kind_raw);
  model.rate = get<double>(is, "model rate");
  model.sigma = get<double>(is, "model sigma");
  model.jump_intensity = get<double>(is, "model jump intensity");
  model.jump_mean = get<double>(is, "model jump mean");
  model.jump_std = get<double>(is, "model jump std");
  model.cev_beta = get<double>(is, "model cev beta");

  const double lo = get<double>(is, "domain lo");
  const double hi = get<double>(is, "domain hi");
  const auto degree = get<std::uint32_t>(is, "degree");
  if (degree > 100000) throw std::runtime_error("load_cache: corrupt degree field");
  const double dt = get<double>(is, "dt");

  const auto tag_len = get<std::uint32_t>(is, "backend tag length");
  if (tag_len > 256) throw std::runtime_error("load_cache: corrupt backend tag field");
  std::string tag(tag_len, '\0');
  is.read(tag.data(), tag_len);
  if (!is) throw std::runtime_error("load_cache: truncated file while reading backend tag");

  MomentMatrixConfig cfg;
  cfg.backend = static_cast<GammaBackend>(get<std::uint32_t>(is, "config backend"));
  cfg.quad_nodes = get<std::int32_t>(is, "config quad nodes");
  cfg.quad_panels = get<std::int32_t>(is, "config quad panels");
  cfg.xi_max = get<double>(is, "config xi max");
  cfg.cc_nodes = get<std::int32_t>(is, "config cc nodes");
  cfg.mc_paths = get<std::uint64_t>(is, "config mc paths");
  cfg.seed = get<std::uint64_t>(is, "config seed");
  cfg.sim.n_sub = get<std::int32_t>(is, "config n_sub");
  cfg.sim.absorb_floor = get<double>(is, "config absorb floor");

  MomentMatrix m;
  m.model = model;
  m.grid = build_grid(Domain(lo, hi), static_cast<int>(degree));
  m.dt = dt;
  m.config = cfg;
  m.backend_tag = tag;

  if (m.fingerprint() != stored_fp)
    throw std::runtime_error(
        "load_cache: integrity check failed (stored fingerprint does not match file "
        "contents)");

  MomentMatrix probe;
  probe.model = expect_model;
  probe.grid = expect_grid;
  probe.dt = expect_dt;
  if (probe.fingerprint() != stored_fp)
    throw std::runtime_error(
        "load_cache: cache was built for a different model, grid, or time step; refusing "
        "to load");

  if (cfg.backend != expect_cfg.backend)
    throw std::runtime_error("load_cache: cache backend '" + to_string(cfg.backend) +
                             "' does not match requested '" +
                             to_string(expect_cfg.backend) + "'");
  switch (cfg.backend) {
    case GammaBackend::ClosedForm:
      break;
    case GammaBackend::Quadrature:
      if (resolved_quad_nodes(cfg, static_cast<int>(degree)) !=
              resolved_quad_nodes(expect_cfg, static_cast<int>(degree)) ||
          cfg.quad_panels != expect_cfg.quad_panels)
        throw std::runtime_error(
            "load_cache: cache quadrature configuration does not match request");
      break;
    case GammaBackend::Fourier:
      if (cfg.xi_max != expect_cfg.xi_max || cfg.cc_nodes != expect_cfg.cc_nodes)
        throw std::runtime_error(
            "load_cache: cache Fourier configuration does not match request");
      break;
    case GammaBackend::MonteCarlo:
      if (cfg.mc_paths != expect_cfg.mc_paths || cfg.seed != expect_cfg.seed ||
          cfg.sim.n_sub != expect_cfg.sim.n_sub ||
          cfg.sim.absorb_floor != expect_cfg.sim.absorb_floor)
        throw std::runtime_error(
            "load_cache: cache Monte Carlo configuration does not match request");
      break;
  }

  const std::size_t np = static_cast<std::size_t>(degree) + 1;
  m.gamma.assign(np * np, 0.0);
  m.tail_q.assign(np, 0.0);
  m.tail_w.assign(np, 0.0);
  get_vec(is, m.gamma, "gamma matrix");
  get_vec(is, m.tail_q, "tail weights q");
  get_vec(is, m.tail_w, "tail weights w");

  const auto n_strikes = get<std::uint32_t>(is, "strike count");
  if (n_strikes > 100000) throw std::runtime_error("load_cache: corrupt strike count");
  for (std::uint32_t s = 0; s < n_strikes; ++s) {
    const double strike = get<double>(is, "strike");
    std::vector<double> values(np);
    get_vec(is, values, "strike tail values");
    m.tail_by_strike.emplace(strike, std::move(values));
  }

  const auto stored_sum = get<std::uint64_t>(is, "payload checksum");
  if (payload_checksum(m) != stored_sum)
    throw std::runtime_error("load_cache: payload checksum mismatch (file is corrupt)");

  return m;
}

}  // namespace dc
