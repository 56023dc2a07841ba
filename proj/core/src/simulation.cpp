#include "kroncov/simulation.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kroncov/bootstrap.hpp"
#include "kroncov/errors.hpp"
#include "kroncov/noise.hpp"
#include "kroncov/parallel.hpp"
#include "kroncov/spectral.hpp"

#include "json.hpp"

namespace kroncov {

namespace {

constexpr std::uint64_t kRoleDesign = 101;
constexpr std::uint64_t kRoleAlternative = 102;
constexpr std::uint64_t kRoleData = 103;
constexpr std::uint64_t kRoleBootstrap = 104;

bool is_noise_scenario(Scenario s) {
  return s == Scenario::noise_null || s == Scenario::noise_ha1 ||
         s == Scenario::noise_ha2;
}

Scenario parse_scenario(const std::string& v) {
  if (v == "null") return Scenario::null_h0;
  if (v == "HA1" || v == "ha1") return Scenario::ha1;
  if (v == "HA2" || v == "ha2") return Scenario::ha2;
  if (v == "noise-null") return Scenario::noise_null;
  if (v == "noise-HA1" || v == "noise-ha1") return Scenario::noise_ha1;
  if (v == "noise-HA2" || v == "noise-ha2") return Scenario::noise_ha2;
  throw ConfigError("unknown scenario '" + v + "'");
}

Method parse_method(const std::string& v) {
  if (v == "FO") return Method::FO;
  if (v == "BG") return Method::BG;
  if (v == "BE") return Method::BE;
  if (v == "FG") return Method::FG;
  if (v == "PG") return Method::PG;
  if (v == "FE") return Method::FE;
  throw ConfigError("unknown method '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + v + "' for key " + key);
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value '" + v + "' for key " + key);
  }
}

// Everything a replication needs; built fresh per replication from its
// derived streams so grid cells stay independently reproducible.
struct ReplicationTask {
  const SimulationConfig* config;
  Scenario scenario;
  Eigen::Index T, p, q;
};

struct MethodOutcome {
  std::vector<bool> reject;  // per alpha
  double statistic = 0;
  bool failed = false;
};

SymmetricMatrix make_sigma_v(const SimulationConfig& cfg, Eigen::Index q) {
  if (cfg.sigma_v_recipe == "identity") return SymmetricMatrix::identity(q);
  if (cfg.sigma_v_recipe == "block") return sigma_block_pairs(q);
  throw ConfigError("unknown sigma_v recipe '" + cfg.sigma_v_recipe + "'");
}

std::vector<MethodOutcome> run_replication(const ReplicationTask& task,
                                           std::uint64_t rep) {
  const SimulationConfig& cfg = *task.config;
  const Eigen::Index T = task.T, p = task.p, q = task.q;
  const std::uint64_t cell_seed =
      derive_seed(cfg.seed, {static_cast<std::uint64_t>(task.scenario),
                             static_cast<std::uint64_t>(T),
                             static_cast<std::uint64_t>(p),
                             static_cast<std::uint64_t>(q), rep});

  std::vector<MethodOutcome> outcomes(cfg.methods.size());

  if (!is_noise_scenario(task.scenario)) {
    RngStream design(derive_seed(cell_seed, {kRoleDesign}));
    const SymmetricMatrix sigma_u0 = sigma_haar_uniform(p, design);
    const SymmetricMatrix sigma_v = make_sigma_v(cfg, q);

    KroneckerModel model;
    model.u = sym_sqrt(sigma_u0.mat());
    model.v = sym_sqrt(sigma_v.mat());
    model.entry_law = cfg.family;
    if (task.scenario != Scenario::null_h0) {
      RngStream alt(derive_seed(cell_seed, {kRoleAlternative}));
      model = alternative_scenarios(model,
                                    task.scenario == Scenario::ha1
                                        ? AlternativeKind::HA1
                                        : AlternativeKind::HA2,
                                    cfg.beta, alt);
    }
    const MatrixDataset data =
        generate_dataset(model, T, derive_seed(cell_seed, {kRoleData}));

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      MethodOutcome& out = outcomes[mi];
      try {
        TestConfig tc;
        tc.alpha = cfg.alpha;
        if (cfg.methods[mi] == Method::FO) {
          tc.known = KnownNuisance{sigma_v, cfg.family.kurtosis()};
          const TestReport r = run_test(data, sigma_u0, tc);
          out.reject = r.reject;
          out.statistic = r.statistic;
        } else {
          if (cfg.methods[mi] == Method::BG)
            tc.known = KnownNuisance{sigma_v, cfg.family.kurtosis()};
          const TestReport r = run_bootstrap_test(
              data, sigma_u0, tc, cfg.bootstrap_B,
              derive_seed(cell_seed,
                          {kRoleBootstrap, static_cast<std::uint64_t>(mi)}));
          out.reject = r.reject;
          out.statistic = r.statistic;
        }
      } catch (const NumericError&) {
        out.failed = true;
      }
    }
    return outcomes;
  }

  // Noised scenarios: U = D1 Gamma1 (perturbed under the alternatives),
  // V = D2 Gamma2, common and individual noise on top.
  RngStream design(derive_seed(cell_seed, {kRoleDesign}));
  const SymmetricMatrix d1_sq = diag_two_point(p, cfg.c1);
  const SymmetricMatrix d2_sq = diag_two_point(q, cfg.c2);
  const Eigen::MatrixXd gamma1 = haar_orthogonal(p, design);
  const Eigen::MatrixXd gamma2 = haar_orthogonal(q, design);
  const Eigen::VectorXd d1 = d1_sq.mat().diagonal().cwiseSqrt();
  const Eigen::VectorXd d2 = d2_sq.mat().diagonal().cwiseSqrt();

  KroneckerModel model;
  model.u = d1.asDiagonal() * gamma1;
  model.v = d2.asDiagonal() * gamma2;
  model.entry_law = cfg.family;
  model.noise_law = cfg.family;
  model.sigma_alpha = cfg.sigma_alpha;
  model.sigma_beta = cfg.sigma_beta;
  if (task.scenario == Scenario::noise_ha1) {
    RngStream alt(derive_seed(cell_seed, {kRoleAlternative}));
    Eigen::VectorXd gamma(p);
    alt.fill_normal(std::span<double>(gamma.data(), static_cast<std::size_t>(p)));
    model.u += (cfg.beta / std::sqrt(static_cast<double>(p))) * gamma *
               gamma.transpose();
  } else if (task.scenario == Scenario::noise_ha2) {
    model.u = (d1 + Eigen::VectorXd::Constant(p, cfg.beta)).asDiagonal() *
              gamma1;
  }
  const SymmetricMatrix sigma_u0 = d1_sq;  // the tested null
  const MatrixDataset data =
      generate_dataset(model, T, derive_seed(cell_seed, {kRoleData}));

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodOutcome& out = outcomes[mi];
    try {
      NoiseTestConfig nc;
      nc.alpha = cfg.alpha;
      switch (cfg.methods[mi]) {
        case Method::FG:
          nc.mode = NoiseMode::FG;
          nc.sigma_v = d2_sq;
          nc.nu4 = cfg.family.kurtosis();
          nc.nu4_noise = cfg.family.kurtosis();
          nc.sigma_beta2 = cfg.sigma_beta * cfg.sigma_beta;
          break;
        case Method::PG:
          nc.mode = NoiseMode::PG;
          nc.sigma_beta2 = cfg.sigma_beta * cfg.sigma_beta;
          break;
        case Method::FE:
          nc.mode = NoiseMode::FE;
          break;
        default:
          throw ConfigError("method " + to_string(cfg.methods[mi]) +
                            " is not valid for noise scenarios");
      }
      const TestReport r = run_noised_test(data, sigma_u0, nc);
      out.reject = r.reject;
      out.statistic = r.statistic;
    } catch (const NumericError&) {
      out.failed = true;
    }
  }
  return outcomes;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::null_h0: return "null";
    case Scenario::ha1: return "HA1";
    case Scenario::ha2: return "HA2";
    case Scenario::noise_null: return "noise-null";
    case Scenario::noise_ha1: return "noise-HA1";
    case Scenario::noise_ha2: return "noise-HA2";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::FO: return "FO";
    case Method::BG: return "BG";
    case Method::BE: return "BE";
    case Method::FG: return "FG";
    case Method::PG: return "PG";
    case Method::FE: return "FE";
  }
  return "?";
}

SimulationConfig SimulationConfig::parse_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

SimulationConfig SimulationConfig::parse_text(const std::string& text) {
  SimulationConfig cfg;
  cfg.dims.clear();
  cfg.methods.clear();
  cfg.alpha.clear();
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() &&
           std::isspace(static_cast<unsigned char>(line[start])))
      ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key=value", lineno);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);

    if (key == "scenario") {
      cfg.scenario = parse_scenario(value);
    } else if (key == "family") {
      cfg.family_name = value;
      if (value == "normal") {
        cfg.family = EntryLaw::gaussian();
      } else if (value == "bernoulli") {
        cfg.family = EntryLaw::rademacher();
      } else if (value.rfind("pearson:", 0) == 0) {
        cfg.family = EntryLaw::pearson(
            parse_double(value.substr(8), "family"));
      } else {
        throw ParseError("unknown family '" + value + "'", lineno);
      }
    } else if (key == "dims") {
      std::istringstream ds(value);
      long T, p, q;
      if (!(ds >> T >> p >> q) || T < 1 || p < 1 || q < 1)
        throw ParseError("dims expects 'T p q'", lineno);
      cfg.dims.push_back({T, p, q});
    } else if (key == "methods") {
      for (const auto& m : split(value, ','))
        cfg.methods.push_back(parse_method(m));
    } else if (key == "alpha") {
      for (const auto& a : split(value, ','))
        cfg.alpha.push_back(parse_double(a, "alpha"));
    } else if (key == "replications") {
      cfg.replications = static_cast<int>(parse_long(value, key));
    } else if (key == "bootstrap_B") {
      cfg.bootstrap_B = static_cast<int>(parse_long(value, key));
    } else if (key == "beta") {
      cfg.beta = parse_double(value, key);
    } else if (key == "sigma_alpha") {
      cfg.sigma_alpha = parse_double(value, key);
    } else if (key == "sigma_beta") {
      cfg.sigma_beta = parse_double(value, key);
    } else if (key == "c1") {
      cfg.c1 = parse_double(value, key);
    } else if (key == "c2") {
      cfg.c2 = parse_double(value, key);
    } else if (key == "sigma_v") {
      cfg.sigma_v_recipe = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
    } else if (key == "dump_stats") {
      cfg.dump_stats = value;
    } else {
      throw ParseError("unknown config key '" + key + "'", lineno);
    }
  }
  if (cfg.alpha.empty()) cfg.alpha = {0.05, 0.10};
  if (cfg.methods.empty())
    cfg.methods = {is_noise_scenario(cfg.scenario) ? Method::FG : Method::FO};
  cfg.validate();
  return cfg;
}

void SimulationConfig::validate() const {
  if (dims.empty()) throw ConfigError("config needs at least one dims= line");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (methods.empty()) throw ConfigError("config needs methods");
  for (Method m : methods) {
    const bool noise_method =
        (m == Method::FG || m == Method::PG || m == Method::FE);
    if (noise_method != is_noise_scenario(scenario))
      throw ConfigError("method " + kroncov::to_string(m) +
                        " does not apply to scenario " +
                        kroncov::to_string(scenario));
  }
  for (double a : alpha)
    if (!(a > 0 && a < 1)) throw ConfigError("alpha must lie in (0,1)");
  if (bootstrap_B < 100) throw ConfigError("bootstrap_B must be >= 100");
}

std::string SizePowerTable::to_csv() const {
  std::string out = "family,p,q,T,method,alpha,rate,se,reps\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%ld,%ld,%ld,%s,%g,%.6f,%.6f,%d\n",
                  r.family.c_str(), static_cast<long>(r.p),
                  static_cast<long>(r.q), static_cast<long>(r.T),
                  r.method.c_str(), r.alpha, r.rate, r.se, r.reps);
    out += buf;
  }
  return out;
}

void SizePowerTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_csv();
}

std::string SizePowerTable::to_json() const {
  nlohmann::json j;
  j["failures"] = failures;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"family", r.family},
                         {"p", r.p},
                         {"q", r.q},
                         {"T", r.T},
                         {"method", r.method},
                         {"alpha", r.alpha},
                         {"rate", r.rate},
                         {"se", r.se},
                         {"reps", r.reps}});
  }
  return j.dump(2);
}

SizePowerTable run_simulation(const SimulationConfig& config, int threads) {
  config.validate();
  SizePowerTable table;

  for (const auto& dims : config.dims) {
    const ReplicationTask task{&config, config.scenario, dims[0], dims[1],
                               dims[2]};
    const int R = config.replications;
    // outcome[rep][method]
    std::vector<std::vector<MethodOutcome>> outcomes(R);
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
      outcomes[r] = run_replication(task, static_cast<std::uint64_t>(r));
    });

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      int ok = 0, failed = 0;
      std::vector<int> rejections(config.alpha.size(), 0);
      for (int r = 0; r < R; ++r) {
        const MethodOutcome& out = outcomes[r][mi];
        if (out.failed) {
          ++failed;
          continue;
        }
        ++ok;
        for (std::size_t ai = 0; ai < config.alpha.size(); ++ai)
          if (out.reject[ai]) ++rejections[ai];
      }
      table.failures += failed;
      if (failed > 0 && failed * 100 > R)
        throw NumericError("more than 1% of replications failed for method " +
                           to_string(config.methods[mi]));
      for (std::size_t ai = 0; ai < config.alpha.size(); ++ai) {
        SizePowerRow row;
        row.family = config.family_name;
        row.T = task.T;
        row.p = task.p;
        row.q = task.q;
        row.method = to_string(config.methods[mi]);
        row.alpha = config.alpha[ai];
        row.reps = ok;
        row.rate = ok ? static_cast<double>(rejections[ai]) / ok : 0.0;
        row.se = ok ? std::sqrt(row.rate * (1.0 - row.rate) / ok) : 0.0;
        table.rows.push_back(row);
      }

      if (!config.dump_stats.empty()) {
        char name[256];
        std::snprintf(name, sizeof(name), "%s_%s_%s_T%ld_p%ld_q%ld.csv",
                      config.dump_stats.c_str(), config.family_name.c_str(),
                      to_string(config.methods[mi]).c_str(),
                      static_cast<long>(task.T), static_cast<long>(task.p),
                      static_cast<long>(task.q));
        std::ofstream out(name);
        if (!out) throw ConfigError(std::string("cannot write ") + name);
        out << "statistic\n";
        for (int r = 0; r < R; ++r)
          if (!outcomes[r][mi].failed)
            out << outcomes[r][mi].statistic << "\n";
      }
    }
  }
  return table;
}

}  // namespace kroncov
