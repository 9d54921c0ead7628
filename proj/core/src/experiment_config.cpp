#include "emfsec/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace emfsec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long out = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter real(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = to_double(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dims.n_bs", [](auto& c, auto& k, auto& v) { c.dims.n_bs = static_cast<std::size_t>(to_int(k, v)); }},
      {"dims.n_ue_tx", [](auto& c, auto& k, auto& v) { c.dims.n_ue_tx = static_cast<std::size_t>(to_int(k, v)); }},
      {"dims.n_ue_rx", [](auto& c, auto& k, auto& v) { c.dims.n_ue_rx = static_cast<std::size_t>(to_int(k, v)); }},
      {"channel.g_u_max", real(&ExperimentConfig::g_u_max)},
      {"channel.v_u", real(&ExperimentConfig::v_u)},
      {"channel.v_e", real(&ExperimentConfig::v_e)},
      {"channel.g_e_scale", real(&ExperimentConfig::g_e_scale)},
      {"channel.g_e_bar_scale", real(&ExperimentConfig::g_e_bar_scale)},
      {"channel.g_d_scale", real(&ExperimentConfig::g_d_scale)},
      {"channel.g_d_bar_scale", real(&ExperimentConfig::g_d_bar_scale)},
      {"power.p_max_db", real(&ExperimentConfig::p_max_db)},
      {"power.p_bar_max_db", real(&ExperimentConfig::p_bar_max_db)},
      {"outage.epsilon", real(&ExperimentConfig::epsilon)},
      {"outage.delta", real(&ExperimentConfig::delta)},
      {"sweep.p_d_max_grid_db", [](auto& c, auto&, auto& v) { c.p_d_max_grid_db = parse_double_list(v); }},
      {"sweep.noise_configs", [](auto& c, auto&, auto& v) { c.noise_configs = parse_noise_list(v); }},
      {"sweep.realizations", [](auto& c, auto& k, auto& v) { c.realizations = static_cast<int>(to_int(k, v)); }},
      {"sweep.seed", [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"sweep.threads", [](auto& c, auto& k, auto& v) { c.threads = static_cast<unsigned>(to_int(k, v)); }},
      {"sweep.warm_start", [](auto& c, auto& k, auto& v) { c.warm_start = to_bool(k, v); }},
      {"solver.max_iters", [](auto& c, auto& k, auto& v) { c.solver.max_iters = static_cast<int>(to_int(k, v)); }},
      {"solver.conv_tol", [](auto& c, auto& k, auto& v) { c.solver.conv_tol = to_double(k, v); }},
      {"solver.subproblem_tol", [](auto& c, auto& k, auto& v) { c.solver.subproblem_tol = to_double(k, v); }},
      {"solver.infeasible_retries",
       [](auto& c, auto& k, auto& v) { c.solver.infeasible_retries = static_cast<int>(to_int(k, v)); }},
      {"solver.certificate_slack", [](auto& c, auto& k, auto& v) { c.solver.certificate_slack = to_double(k, v); }},
      {"penalty.initial",
       [](auto& c, auto& k, auto& v) {
         const double g = to_double(k, v);
         c.penalty.initial = {g, g, g, g};
       }},
      {"penalty.gamma_r", [](auto& c, auto& k, auto& v) { c.penalty.initial.gamma_r = to_double(k, v); }},
      {"penalty.gamma", [](auto& c, auto& k, auto& v) { c.penalty.initial.gamma = to_double(k, v); }},
      {"penalty.gamma_n", [](auto& c, auto& k, auto& v) { c.penalty.initial.gamma_n = to_double(k, v); }},
      {"penalty.gamma_n_bar", [](auto& c, auto& k, auto& v) { c.penalty.initial.gamma_n_bar = to_double(k, v); }},
      {"penalty.growth_factor", [](auto& c, auto& k, auto& v) { c.penalty.growth_factor = to_double(k, v); }},
      {"penalty.growth_every",
       [](auto& c, auto& k, auto& v) { c.penalty.growth_every = static_cast<int>(to_int(k, v)); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = trim(v); }},
      {"single.p_d_max_db", real(&ExperimentConfig::single_p_d_max_db)},
      {"single.noise_config",
       [](auto& c, auto&, auto& v) {
         try {
           c.single_noise = NoiseConfig::parse(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"single.realization",
       [](auto& c, auto& k, auto& v) { c.single_realization = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

}  // namespace

std::vector<double> ExperimentConfig::default_grid_db() { return {-10, -5, 0, 5, 10, 15, 20, 25}; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(dims.n_bs >= 1 && dims.n_ue_tx >= 1 && dims.n_ue_rx >= 1, "dimensions must be >= 1");
  need(g_u_max >= 0.0, "channel.g_u_max must be >= 0");
  need(v_u > 0.0 && v_e > 0.0, "noise powers must be > 0");
  need(g_e_scale >= 0.0 && g_e_bar_scale >= 0.0 && g_d_scale >= 0.0 && g_d_bar_scale >= 0.0,
       "channel covariance scales must be >= 0");
  need(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0, "epsilon and delta must lie in (0,1)");
  need(!p_d_max_grid_db.empty(), "sweep.p_d_max_grid_db must be nonempty");
  need(!noise_configs.empty(), "sweep.noise_configs must be nonempty");
  need(realizations >= 1, "sweep.realizations must be >= 1");
  need(solver.max_iters >= 1, "solver.max_iters must be >= 1");
  need(solver.conv_tol > 0.0, "solver.conv_tol must be > 0");
  need(solver.subproblem_tol >= 1e-9 && solver.subproblem_tol <= 1e-4, "solver.subproblem_tol must lie in [1e-9, 1e-4]");
  need(single_realization >= 0, "single.realization must be >= 0");
  try {
    penalty.validate();
  } catch (const NumericalError& e) {
    throw ConfigError(e.what());
  }
}

ChannelModel ExperimentConfig::channel(const ComplexMatrix& h_u) const {
  ChannelModel ch;
  ch.h_u = h_u;
  ch.g_u_max = g_u_max;
  ch.v_u = HermitianMatrix::identity(dims.n_ue_rx, v_u);
  ch.v_e = v_e;
  ch.g_e = HermitianMatrix::identity(dims.n_bs, g_e_scale);
  ch.g_e_bar = HermitianMatrix::identity(dims.n_ue_tx, g_e_bar_scale);
  ch.g_d = HermitianMatrix::identity(dims.n_bs, g_d_scale);
  ch.g_d_bar = HermitianMatrix::identity(dims.n_ue_tx, g_d_bar_scale);
  return ch;
}

OutageSpec ExperimentConfig::outage(double p_d_max_db) const {
  OutageSpec s;
  s.epsilon = epsilon;
  s.delta = delta;
  s.p_d_max = db_to_linear(p_d_max_db);
  s.p_max = db_to_linear(p_max_db);
  s.p_bar_max = db_to_linear(p_bar_max_db);
  return s;
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(cfg, key, value);
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_config_value(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) continue;
    out.push_back(to_double("list", tok));
  }
  if (out.empty()) throw ConfigError("expected a nonempty comma-separated list of numbers");
  return out;
}

std::vector<NoiseConfig> parse_noise_list(const std::string& text) {
  std::vector<NoiseConfig> out;
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) continue;
    try {
      const auto c = NoiseConfig::parse(tok);
      for (const auto& o : out) {
        if (o == c) throw ConfigError("noise configuration '" + tok + "' listed twice");
      }
      out.push_back(c);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("expected at least one noise configuration");
  return out;
}

ComplexMatrix parse_matrix(const std::string& text) {
  std::vector<std::vector<cdouble>> rows;
  for (const auto& row : split(text, ';')) {
    if (row.empty()) continue;
    std::vector<cdouble> entries;
    std::string cleaned = row;
    for (auto& ch : cleaned) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        entries.emplace_back(to_double("matrix", tok), 0.0);
      } else {
        entries.emplace_back(to_double("matrix", tok.substr(0, colon)), to_double("matrix", tok.substr(colon + 1)));
      }
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ConfigError("empty matrix");
  const std::size_t cols = rows.front().size();
  ComplexMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ConfigError("matrix rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace emfsec
