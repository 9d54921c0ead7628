#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emfsec/experiment.hpp"

using namespace emfsec;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig cfg;
  cfg.p_d_max_grid_db = {0.0, 10.0};
  cfg.noise_configs = {NoiseConfig::none(), NoiseConfig::both()};
  cfg.realizations = 2;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsDescribeTheReferenceSetup) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.p_d_max_grid_db, (std::vector<double>{-10, -5, 0, 5, 10, 15, 20, 25}));
  EXPECT_EQ(cfg.noise_configs.size(), 4u);
  EXPECT_EQ(cfg.realizations, 20);
  EXPECT_NEAR(cfg.outage(0.0).p_max, 10.0, 1e-12);
  EXPECT_NEAR(cfg.outage(0.0).p_d_max, 1.0, 1e-15);
  const auto ch = cfg.channel(ComplexMatrix::Ones(1, 2));
  EXPECT_NO_THROW(ch.validate());
  EXPECT_EQ(ch.g_u_max, 0.1);
  EXPECT_EQ(ch.v_e, 0.1);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesTextWithComments) {
  const auto cfg = parse_config_text(
      "# a comment\n"
      "channel.g_u_max = 0.2   # trailing\n"
      "\n"
      "sweep.p_d_max_grid_db = -3, 4.5\n"
      "sweep.noise_configs = ue-only, both\n"
      "sweep.warm_start = on\n"
      "output.dir = somewhere\n");
  EXPECT_EQ(cfg.g_u_max, 0.2);
  EXPECT_EQ(cfg.p_d_max_grid_db, (std::vector<double>{-3.0, 4.5}));
  ASSERT_EQ(cfg.noise_configs.size(), 2u);
  EXPECT_EQ(cfg.noise_configs[0], NoiseConfig::ue_only());
  EXPECT_TRUE(cfg.warm_start);
  EXPECT_EQ(cfg.output_dir, "somewhere");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config_text("no.such.key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("channel.g_u_max 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("channel.g_u_max = abc\n"), ConfigError);
  EXPECT_THROW(parse_config_text("sweep.realizations = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("sweep.noise_configs = both, both\n"), ConfigError);
  EXPECT_THROW(parse_config_text("sweep.noise_configs = all\n"), ConfigError);
  EXPECT_THROW(parse_config_text("sweep.warm_start = maybe\n"), ConfigError);
  EXPECT_THROW(parse_double_list(","), ConfigError);
  EXPECT_THROW(load_config_file("/nonexistent/emfsec.cfg"), ConfigError);
  auto cfg = ExperimentConfig{};
  cfg.realizations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.epsilon = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.penalty.growth_factor = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ParsesComplexMatrices) {
  const auto m = parse_matrix("1, 0:1; -2.5 3:-4");
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m(0, 1), cdouble(0.0, 1.0));
  EXPECT_EQ(m(1, 0), cdouble(-2.5, 0.0));
  EXPECT_EQ(m(1, 1), cdouble(3.0, -4.0));
  EXPECT_THROW(parse_matrix("1 2; 3"), ConfigError);
  EXPECT_THROW(parse_matrix(""), ConfigError);
}

TEST(Config, DecibelConversion) {
  EXPECT_DOUBLE_EQ(db_to_linear(0.0), 1.0);
  EXPECT_DOUBLE_EQ(db_to_linear(10.0), 10.0);
  EXPECT_NEAR(db_to_linear(-10.0), 0.1, 1e-16);
  EXPECT_NEAR(db_to_linear(3.0), 1.9952623149688795, 1e-15);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(10.0), "10");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  for (double v : {1.0 / 3.0, 6.02214076e23, -1e-300, 2.718281828459045}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
}

TEST(Channels, PairedAcrossCallsAndDistinctAcrossRealizations) {
  const ExperimentConfig cfg;
  EXPECT_EQ(draw_user_channel(cfg, 3), draw_user_channel(cfg, 3));
  EXPECT_NE(draw_user_channel(cfg, 3), draw_user_channel(cfg, 4));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(draw_user_channel(other, 3), draw_user_channel(cfg, 3));
}

TEST(Sweep, SingleCellProducesOneRecord) {
  auto cfg = tiny();
  cfg.p_d_max_grid_db = {5.0};
  cfg.noise_configs = {NoiseConfig::none()};
  cfg.realizations = 1;
  const auto recs = run_sweep_records(cfg);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].noise_config, "none");
  EXPECT_EQ(recs[0].p_d_max_db, 5.0);
  EXPECT_EQ(recs[0].p_n, 0.0);
  EXPECT_EQ(recs[0].p_bar_n, 0.0);
  EXPECT_GE(recs[0].sop_certificate, 0.95 - 1e-6);
}

TEST(Sweep, RecordsAreOrderedAndAggregated) {
  const auto cfg = tiny();
  const auto recs = run_sweep_records(cfg);
  ASSERT_EQ(recs.size(), 8u);
  EXPECT_EQ(recs[0].p_d_max_db, 0.0);
  EXPECT_EQ(recs[0].noise_config, "none");
  EXPECT_EQ(recs[1].realization_index, 1);
  EXPECT_EQ(recs[2].noise_config, "both");
  EXPECT_EQ(recs[4].p_d_max_db, 10.0);

  const auto agg = aggregate_records(recs, cfg);
  ASSERT_EQ(agg.size(), 4u);
  EXPECT_EQ(agg[0].count, 2);
  EXPECT_NEAR(agg[0].mean_r_eps, 0.5 * (recs[0].r_eps + recs[1].r_eps), 1e-15);
  EXPECT_NEAR(agg[0].se_r_eps, std::abs(recs[0].r_eps - recs[1].r_eps) / 2.0, 1e-12);

  const std::string csv = records_csv(recs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "p_d_max_db,p_d_max,noise_config,realization_index,r_eps,r_e_max,p,p_n,p_bar_n,iterations,status,"
            "sop_certificate,exposure_certificate");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  const std::string acsv = aggregate_csv(agg);
  EXPECT_EQ(std::count(acsv.begin(), acsv.end(), '\n'), 5);
}

TEST(Sweep, OutputsAreByteIdenticalAcrossRunsAndThreadCounts) {
  auto cfg = tiny();
  const auto dir = std::filesystem::temp_directory_path() / "emfsec_unit_sweep";
  std::filesystem::remove_all(dir);
  cfg.output_dir = (dir / "a").string();
  const auto a = run_sweep(cfg);
  cfg.output_dir = (dir / "b").string();
  cfg.threads = 2;
  const auto b = run_sweep(cfg);
  EXPECT_EQ(slurp(a.records_path), slurp(b.records_path));
  EXPECT_EQ(slurp(a.aggregate_path), slurp(b.aggregate_path));
  EXPECT_FALSE(slurp(a.records_path).empty());
  std::filesystem::remove_all(dir);
}

TEST(Single, JsonCarriesTraceAndIsDeterministic) {
  ExperimentConfig cfg;
  cfg.single_p_d_max_db = 5.0;
  const std::string a = run_single_json(cfg);
  EXPECT_EQ(a, run_single_json(cfg));
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["noise_config"], "both");
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_FALSE(j["trace"].empty());
  EXPECT_EQ(j["trace"].size(), j["iterations"].get<std::size_t>());
  EXPECT_NEAR(j["r_eps"].get<double>(), run_single(cfg).r_eps, 0.0);
}

TEST(Single, VanishingExposureBudgetSilencesTheLink) {
  ExperimentConfig cfg;
  cfg.single_p_d_max_db = -90.0;
  cfg.single_noise = NoiseConfig::none();
  const auto res = run_single(cfg);
  EXPECT_LE(res.r_eps, 1e-6);
  EXPECT_LE(res.cov.q.trace(), 1e-6);
}
