#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jcdpt/cli.hpp"

namespace fs = std::filesystem;
using jcdpt::cli::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "jcdpt");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = jcdpt::cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream f(p);
    std::string l;
    std::getline(f, l);
    return l;
}

std::size_t data_rows(const fs::path& p) {
    std::ifstream f(p);
    std::string l;
    std::size_t n = 0;
    while (std::getline(f, l)) ++n;
    return n - 1;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("jcdpt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write_config(const std::string& name, const json& j) {
        const fs::path p = dir / name;
        std::ofstream(p) << j.dump();
        return p;
    }

    fs::path dir;
};

} // namespace

TEST(CliFormat, TwelveSignificantDigits) {
    EXPECT_EQ(jcdpt::cli::fmt(1309.78), "1309.78");
    EXPECT_EQ(jcdpt::cli::fmt(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(jcdpt::cli::fmt(std::nan("")), "nan");
}

TEST(CliConfig, DefaultsAndRoundTrip) {
    const auto c = jcdpt::cli::parse_config(json::object());
    EXPECT_DOUBLE_EQ(c.params.g, 0.12);
    EXPECT_DOUBLE_EQ(c.params.gamma_theta, 0.17);
    EXPECT_FALSE(c.nmax.has_value());
    const auto j = jcdpt::cli::to_json(c);
    EXPECT_EQ(jcdpt::cli::to_json(jcdpt::cli::parse_config(j)), j);
}

TEST(CliConfig, Rejections) {
    using jcdpt::ConfigError;
    using jcdpt::cli::parse_config;
    EXPECT_THROW(parse_config(json{{"bogus", 1}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"kapa", 0.1}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"kappa", -0.1}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"kappa", "x"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"delta", 0.1}, {"omega_x", 1309.0}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"nmax", 0}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"nmax", "many"}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"schema_version", 2}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"sweep_gamma", {{"gamma_max_over_g", 3.0}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"ep", {{"model", "other"}}}}), ConfigError);
    EXPECT_EQ(*parse_config(json{{"nmax", 7}}).nmax, 7);
    EXPECT_NEAR(parse_config(json{{"params", {{"delta", 0.1}}}}).params.delta(), 0.1, 1e-12);
}

TEST_F(CliTest, SpectrumGoldenHeadersAndTriplet) {
    const auto r = run({"spectrum", "--out", dir.string(), "--plots"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(dir / "spectrum.csv"), "omega_meV,intensity");
    EXPECT_EQ(first_line(dir / "peaks.csv"), "position_meV,height,fwhm_meV,prominence");
    EXPECT_EQ(data_rows(dir / "spectrum.csv"), 4001u);
    EXPECT_EQ(data_rows(dir / "peaks.csv"), 3u);
    EXPECT_TRUE(fs::exists(dir / "spectrum.svg"));
    const json m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["command"], "spectrum");
    EXPECT_EQ(m["version"], jcdpt::cli::tool_version);
    EXPECT_TRUE(m.contains("wall_time_s"));
    EXPECT_EQ(m["truncation"]["n_max"], 5);
}

TEST_F(CliTest, SpectrumWithoutPhononsIsDoublet) {
    const auto cfg = write_config("c.json", {{"params", {{"gamma_theta", 0.0}}}});
    ASSERT_EQ(run({"spectrum", "--config", cfg.string(), "--out", (dir / "o").string()}).code, 0);
    EXPECT_EQ(data_rows(dir / "o" / "peaks.csv"), 2u);
}

TEST_F(CliTest, ManifestReproducesOutputs) {
    const auto cfg = write_config("c.json", {{"params", {{"gamma_theta", 0.1}}}, {"nmax", 6}});
    ASSERT_EQ(run({"spectrum", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"spectrum", "--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "b").string()}).code,
              0);
    for (const char* f : {"spectrum.csv", "peaks.csv"}) EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    const json ma = json::parse(slurp(dir / "a" / "manifest.json"));
    const json mb = json::parse(slurp(dir / "b" / "manifest.json"));
    EXPECT_EQ(ma["config"], mb["config"]);
}

TEST_F(CliTest, ConfigErrorsLeaveNoOutputs) {
    const auto cfg = write_config("bad.json", {{"params", {{"kappa", -0.01}}}});
    const auto r = run({"spectrum", "--config", cfg.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("config"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "o"));

    const fs::path broken = dir / "broken.json";
    std::ofstream(broken) << "{ not json";
    EXPECT_EQ(run({"spectrum", "--config", broken.string(), "--out", (dir / "o").string()}).code, 2);
    EXPECT_EQ(run({"spectrum", "--nmax", "zero", "--out", (dir / "o").string()}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST_F(CliTest, NumericalFailureExitCode) {
    // With every rate off the stationary state is not unique.
    const auto cfg = write_config(
        "c.json", {{"params", {{"kappa", 0.0}, {"gamma_x", 0.0}, {"P_x", 0.0}, {"gamma_theta", 0.0}}}, {"nmax", 3}});
    const auto r = run({"steady-state", "--config", cfg.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("steady-state"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST_F(CliTest, EpTable) {
    const auto r = run({"ep", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("numeric/g"), std::string::npos);
    EXPECT_EQ(first_line(dir / "ep_table.csv"), "n,numeric_over_g,formula_over_g,relative_deviation,status");
    EXPECT_EQ(data_rows(dir / "ep_table.csv"), 5u);

    const auto empty = write_config("e.json", {{"ep", {{"rungs", json::array()}}}});
    EXPECT_EQ(run({"ep", "--config", empty.string(), "--out", (dir / "e").string()}).code, 2);

    const auto far = write_config("f.json", {{"ep", {{"rungs", {1}}, {"scan_max_over_g", 1.0}}}});
    const auto rf = run({"ep", "--config", far.string(), "--out", (dir / "f").string()});
    EXPECT_EQ(rf.code, 0);
    EXPECT_NE(rf.out.find("no-coalescence"), std::string::npos);
}

TEST_F(CliTest, SweepDetuningEndpoints) {
    const auto cfg = write_config("c.json", {{"sweep_detuning", {{"delta_min", -0.5}, {"delta_max", 0.5}, {"count", 2}}}});
    const auto r = run({"sweep-detuning", "--config", cfg.string(), "--out", dir.string(), "--threads", "2", "--plots"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(dir / "detuning_peaks.csv"),
              "delta_meV,delta_lambda_nm,peak_position_meV,height,fwhm_meV,branch_tag");
    EXPECT_GE(data_rows(dir / "detuning_peaks.csv"), 4u);
    EXPECT_TRUE(fs::exists(dir / "detuning_peaks.svg"));
}

TEST_F(CliTest, SweepDetuningIsThreadIndependent) {
    const auto cfg = write_config("c.json", {{"sweep_detuning", {{"delta_min", -0.3}, {"delta_max", 0.3}, {"count", 4}}}});
    ASSERT_EQ(run({"sweep-detuning", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"sweep-detuning", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads", "3"}).code,
              0);
    EXPECT_EQ(slurp(dir / "a" / "detuning_peaks.csv"), slurp(dir / "b" / "detuning_peaks.csv"));
}

TEST_F(CliTest, SweepGammaFiles) {
    const auto cfg = write_config("c.json", {{"sweep_gamma", {{"points", 46}, {"n_rungs", 6}}}});
    const auto r = run({"sweep-gamma", "--config", cfg.string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(dir / "gamma_frequencies.csv"), "gamma_theta_over_g,n,omega_mm_over_g,omega_mp_over_g");
    EXPECT_EQ(first_line(dir / "gamma_energy.csv"), "gamma_theta_over_g,n,linewidth_mm_meV,E_n");
    EXPECT_EQ(first_line(dir / "gamma_G.csv"), "gamma_theta_over_g,G,dG_dgamma_theta");
    EXPECT_EQ(first_line(dir / "gamma_coefficients.csv"), "gamma_theta_over_g,n,C00_sq,C11_sq");
    EXPECT_EQ(first_line(dir / "ep_table.csv"), "n,numeric_over_g,formula_over_g,relative_deviation,coalescence_gap_meV");
    EXPECT_EQ(first_line(dir / "linewidth_ratio.csv"), "gamma_theta_over_g,n,ratio");
    EXPECT_EQ(first_line(dir / "showcase_spectra.csv"), "tag,gamma_theta_over_g,omega_meV,intensity");
    EXPECT_EQ(first_line(dir / "showcase_peaks.csv"), "tag,gamma_theta_over_g,position_meV,height,fwhm_meV,prominence");
    EXPECT_EQ(data_rows(dir / "gamma_frequencies.csv"), 6u * 46u);
    EXPECT_EQ(data_rows(dir / "showcase_spectra.csv"), 4u * 4001u);
    // First rung at γθ = 0: the Rabi doublet at ±g.
    std::ifstream f(dir / "gamma_frequencies.csv");
    std::string header, row;
    std::getline(f, header);
    std::getline(f, row);
    EXPECT_EQ(row.rfind("0,1,", 0), 0u);
    double mm = 0, mp = 0;
    std::sscanf(row.c_str() + 4, "%lf,%lf", &mm, &mp);
    EXPECT_NEAR(mm, -1.0, 1e-3);
    EXPECT_NEAR(mp, 1.0, 1e-3);
}

TEST_F(CliTest, SteadyStateFiles) {
    const auto r = run({"steady-state", "--out", dir.string(), "--nmax", "6"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(dir / "steady_state.csv"), "quantity,value");
    EXPECT_EQ(first_line(dir / "density_matrix.csv"), "row,col,re,im");
    EXPECT_EQ(data_rows(dir / "density_matrix.csv"), 14u * 14u);
    EXPECT_EQ(data_rows(dir / "photon_distribution.csv"), 7u);
}
