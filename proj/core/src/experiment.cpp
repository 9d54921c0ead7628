#include "emfsec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "emfsec/monte_carlo.hpp"

namespace emfsec {

namespace {

using json = nlohmann::ordered_json;

// Stream keys for H_U draws live far from the Monte Carlo chunk indices.
constexpr std::uint64_t kChannelStream = 0x4855000000000000ULL;

bool is_subset(const NoiseConfig& a, const NoiseConfig& b) {
  return !(a == b) && (!a.bs_noise_enabled || b.bs_noise_enabled) && (!a.ue_noise_enabled || b.ue_noise_enabled);
}

SweepRecord make_record(double db, const OutageSpec& spec, const NoiseConfig& nc, int r, const SolveResult& res) {
  SweepRecord rec;
  rec.p_d_max_db = db;
  rec.p_d_max = spec.p_d_max;
  rec.noise_config = nc.name();
  rec.realization_index = r;
  rec.r_eps = res.r_eps;
  rec.r_e_max = res.cov.r_e_max;
  rec.p = res.cov.q.trace();
  rec.p_n = res.cov.q_n.trace();
  rec.p_bar_n = res.cov.q_n_bar.trace();
  rec.iterations = res.iterations;
  rec.status = to_string(res.status);
  rec.sop_certificate = res.sop_certificate;
  rec.exposure_certificate = res.exposure_certificate;
  return rec;
}

// All cells of one realization. Grid points run in ascending order and the
// configurations from fewest to most noise sources, so that earlier results
// can seed later ones.
std::vector<SweepRecord> run_realization(const ExperimentConfig& cfg, int r) {
  const auto ch = cfg.channel(draw_user_channel(cfg, r));
  const auto& grid = cfg.p_d_max_grid_db;

  std::vector<std::size_t> grid_order(grid.size());
  std::iota(grid_order.begin(), grid_order.end(), 0);
  std::stable_sort(grid_order.begin(), grid_order.end(), [&](auto a, auto b) { return grid[a] < grid[b]; });

  std::vector<std::size_t> cfg_order(cfg.noise_configs.size());
  std::iota(cfg_order.begin(), cfg_order.end(), 0);
  auto weight = [&](std::size_t i) {
    return int(cfg.noise_configs[i].bs_noise_enabled) * 2 + int(cfg.noise_configs[i].ue_noise_enabled);
  };
  auto sources = [&](std::size_t i) {
    return int(cfg.noise_configs[i].bs_noise_enabled) + int(cfg.noise_configs[i].ue_noise_enabled);
  };
  std::stable_sort(cfg_order.begin(), cfg_order.end(), [&](auto a, auto b) {
    return sources(a) != sources(b) ? sources(a) < sources(b) : weight(a) > weight(b);
  });

  const std::size_t n_cfg = cfg.noise_configs.size();
  std::vector<SweepRecord> out(grid.size() * n_cfg);
  std::vector<std::optional<CovarianceSet>> previous(n_cfg);

  for (const std::size_t g : grid_order) {
    const auto spec = cfg.outage(grid[g]);
    std::vector<std::optional<CovarianceSet>> here(n_cfg);
    for (const std::size_t c : cfg_order) {
      const auto& nc = cfg.noise_configs[c];
      SweepRecord rec;
      try {
        CovarianceSet start = initialize(ch, spec, nc);
        if (cfg.warm_start) {
          double best = secrecy_objective(ch, start);
          auto consider = [&](const CovarianceSet& cand) {
            if (!certify(ch, spec, cand, cfg.solver.certificate_slack)) return;
            const double v = secrecy_objective(ch, cand);
            if (v > best) {
              best = v;
              start = cand;
            }
          };
          if (previous[c]) consider(*previous[c]);
          for (std::size_t o = 0; o < n_cfg; ++o) {
            if (here[o] && is_subset(cfg.noise_configs[o], nc)) consider(*here[o]);
          }
        }
        const auto res = optimize_from(ch, spec, nc, start, cfg.penalty, cfg.solver);
        rec = make_record(grid[g], spec, nc, r, res);
        if (res.certified) {
          here[c] = res.cov;
          previous[c] = res.cov;
        }
      } catch (const std::exception& e) {
        rec.p_d_max_db = grid[g];
        rec.p_d_max = spec.p_d_max;
        rec.noise_config = nc.name();
        rec.realization_index = r;
        rec.status = std::string("error: ") + e.what();
      }
      out[g * n_cfg + c] = rec;
    }
  }
  return out;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json matrix_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << content;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ComplexMatrix draw_user_channel(const ExperimentConfig& cfg, int realization) {
  CounterRng rng(cfg.seed, kChannelStream + static_cast<std::uint64_t>(realization));
  const auto rows = static_cast<Eigen::Index>(cfg.dims.n_ue_rx);
  const auto cols = static_cast<Eigen::Index>(cfg.dims.n_bs);
  ComplexMatrix h(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) h(i, j) = rng.complex_normal() / std::sqrt(2.0);
  }
  return h;
}

std::vector<SweepRecord> run_sweep_records(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto n_real = static_cast<std::size_t>(cfg.realizations);
  std::vector<std::vector<SweepRecord>> per_real(n_real);

  unsigned t = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, n_real));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n_real; r = next++) per_real[r] = run_realization(cfg, static_cast<int>(r));
  };
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Single collector: grid order, then configuration order, then realization.
  const std::size_t n_cfg = cfg.noise_configs.size();
  std::vector<SweepRecord> out;
  out.reserve(cfg.p_d_max_grid_db.size() * n_cfg * n_real);
  for (std::size_t g = 0; g < cfg.p_d_max_grid_db.size(); ++g) {
    for (std::size_t c = 0; c < n_cfg; ++c) {
      for (std::size_t r = 0; r < n_real; ++r) out.push_back(per_real[r][g * n_cfg + c]);
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate_records(const std::vector<SweepRecord>& records, const ExperimentConfig& cfg) {
  std::vector<AggregateRow> rows;
  for (double db : cfg.p_d_max_grid_db) {
    for (const auto& nc : cfg.noise_configs) {
      const std::string name = nc.name();
      std::vector<double> r_eps, r_e_max, p, p_n, p_bar_n;
      AggregateRow row;
      row.p_d_max_db = db;
      row.p_d_max = db_to_linear(db);
      row.noise_config = name;
      for (const auto& rec : records) {
        if (rec.p_d_max_db != db || rec.noise_config != name) continue;
        if (rec.status.rfind("error", 0) == 0) continue;
        ++row.count;
        if (rec.status == "converged") ++row.converged;
        r_eps.push_back(rec.r_eps);
        r_e_max.push_back(rec.r_e_max);
        p.push_back(rec.p);
        p_n.push_back(rec.p_n);
        p_bar_n.push_back(rec.p_bar_n);
      }
      row.mean_r_eps = mean(r_eps);
      row.se_r_eps = std_error(r_eps);
      row.mean_r_e_max = mean(r_e_max);
      row.se_r_e_max = std_error(r_e_max);
      row.mean_p = mean(p);
      row.se_p = std_error(p);
      row.mean_p_n = mean(p_n);
      row.se_p_n = std_error(p_n);
      row.mean_p_bar_n = mean(p_bar_n);
      row.se_p_bar_n = std_error(p_bar_n);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string records_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << "p_d_max_db,p_d_max,noise_config,realization_index,r_eps,r_e_max,p,p_n,p_bar_n,iterations,status,"
         "sop_certificate,exposure_certificate\n";
  for (const auto& r : records) {
    out << format_number(r.p_d_max_db) << ',' << format_number(r.p_d_max) << ',' << r.noise_config << ','
        << r.realization_index << ',' << format_number(r.r_eps) << ',' << format_number(r.r_e_max) << ','
        << format_number(r.p) << ',' << format_number(r.p_n) << ',' << format_number(r.p_bar_n) << ','
        << r.iterations << ',' << csv_field(r.status) << ',' << format_number(r.sop_certificate) << ','
        << format_number(r.exposure_certificate) << '\n';
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "p_d_max_db,p_d_max,noise_config,count,converged,mean_r_eps,se_r_eps,mean_r_e_max,se_r_e_max,"
         "mean_p,se_p,mean_p_n,se_p_n,mean_p_bar_n,se_p_bar_n\n";
  for (const auto& r : rows) {
    out << format_number(r.p_d_max_db) << ',' << format_number(r.p_d_max) << ',' << r.noise_config << ','
        << r.count << ',' << r.converged << ',' << format_number(r.mean_r_eps) << ',' << format_number(r.se_r_eps)
        << ',' << format_number(r.mean_r_e_max) << ',' << format_number(r.se_r_e_max) << ','
        << format_number(r.mean_p) << ',' << format_number(r.se_p) << ',' << format_number(r.mean_p_n) << ','
        << format_number(r.se_p_n) << ',' << format_number(r.mean_p_bar_n) << ',' << format_number(r.se_p_bar_n)
        << '\n';
  }
  return out.str();
}

SweepOutput run_sweep(const ExperimentConfig& cfg) {
  SweepOutput out;
  out.records = run_sweep_records(cfg);
  out.aggregate = aggregate_records(out.records, cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  out.records_path = dir / "records.csv";
  out.aggregate_path = dir / "aggregate.csv";
  write_file(out.records_path, records_csv(out.records));
  write_file(out.aggregate_path, aggregate_csv(out.aggregate));
  return out;
}

SolveResult run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ch = cfg.channel(draw_user_channel(cfg, cfg.single_realization));
  return optimize(ch, cfg.outage(cfg.single_p_d_max_db), cfg.single_noise, cfg.penalty, cfg.solver);
}

std::string run_single_json(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto h_u = draw_user_channel(cfg, cfg.single_realization);
  const auto spec = cfg.outage(cfg.single_p_d_max_db);
  json j;
  j["p_d_max_db"] = cfg.single_p_d_max_db;
  j["p_d_max"] = spec.p_d_max;
  j["noise_config"] = cfg.single_noise.name();
  j["realization_index"] = cfg.single_realization;
  j["seed"] = cfg.seed;
  j["h_u"] = matrix_json(h_u);
  try {
    const auto res = optimize(cfg.channel(h_u), spec, cfg.single_noise, cfg.penalty, cfg.solver);
    j["status"] = to_string(res.status);
    j["r_eps"] = res.r_eps;
    j["r_u"] = res.r_u;
    j["r_e_max"] = res.cov.r_e_max;
    j["p"] = res.cov.q.trace();
    j["p_n"] = res.cov.q_n.trace();
    j["p_bar_n"] = res.cov.q_n_bar.trace();
    j["iterations"] = res.iterations;
    j["certified"] = res.certified;
    j["sop_certificate"] = res.sop_certificate;
    j["exposure_certificate"] = res.exposure_certificate;
    j["q"] = matrix_json(res.cov.q.matrix());
    j["q_n"] = matrix_json(res.cov.q_n.matrix());
    j["q_n_bar"] = matrix_json(res.cov.q_n_bar.matrix());
    j["w"] = matrix_json(res.precoders.w);
    j["w_n"] = matrix_json(res.precoders.w_n);
    j["w_n_bar"] = matrix_json(res.precoders.w_n_bar);
    json trace = json::array();
    for (const auto& t : res.trace) {
      trace.push_back({{"iteration", t.iteration},
                       {"objective", t.objective},
                       {"surrogate", t.surrogate},
                       {"step_q", t.step_q},
                       {"step_q_n", t.step_qn},
                       {"step_q_n_bar", t.step_qn_bar},
                       {"step_r_e_max", t.step_r},
                       {"gamma_r", t.penalties.gamma_r},
                       {"gamma", t.penalties.gamma},
                       {"gamma_n", t.penalties.gamma_n},
                       {"gamma_n_bar", t.penalties.gamma_n_bar},
                       {"subproblem_status", t.subproblem_status},
                       {"sop", t.sop},
                       {"exposure", t.exposure}});
    }
    j["trace"] = trace;
  } catch (const std::exception& e) {
    j["status"] = "error";
    j["error"] = e.what();
  }
  return j.dump(2) + "\n";
}

}  // namespace emfsec
