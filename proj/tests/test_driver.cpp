#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "msfem/driver/config.hpp"
#include "msfem/driver/experiment.hpp"
#include "msfem/driver/output.hpp"
#include "oracle.hpp"

using namespace msfem;
using namespace msfem::driver;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("msfem_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
}

std::string key_of(const std::string& json)
{
    try {
        (void)parse_config(json);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

}  // namespace

TEST(Config, PresetsValidate)
{
    for (Preset p : {Preset::convergence2, Preset::experiment1, Preset::experiment2, Preset::custom}) {
        EXPECT_NO_THROW(validate(preset_defaults(p))) << to_string(p);
    }
    const auto e1 = preset_defaults(Preset::experiment1);
    EXPECT_EQ(e1.params.V, (std::vector<double>{0.35, 0.35, 0.8}));
    EXPECT_EQ(e1.params.nu, 1e-2);
    const auto e2 = preset_defaults(Preset::experiment2);
    EXPECT_EQ(e2.params.V, (std::vector<double>{0.35, 0.65, 0.5}));
    EXPECT_EQ(e2.params.mobility_scale, 0.1);
    EXPECT_EQ(convergence_volumes('B'), (std::vector<double>{0.5, 0.5}));
    EXPECT_THROW((void)convergence_volumes('C'), ConfigError);
}

TEST(Config, RoundTrip)
{
    for (Preset p : {Preset::convergence2, Preset::experiment1, Preset::experiment2, Preset::custom}) {
        const auto c = preset_defaults(p);
        EXPECT_EQ(parse_config(serialize_config(c)), c) << to_string(p);
    }
    auto c = parse_config(R"({"preset":"custom","n_components":3,"V":[0.35,0.65,0.5],"uniform_rho":[0.6,0.5],
                             "uniform_u":[0.1,-0.25],"tau":0.0025,"t_final":0.0125,"nu":0.3,"lambda":0.1,
                             "snapshot_times":[0.0,0.005],"vtu":true,"output_dir":"x/y"})");
    EXPECT_EQ(c.params.n_components, 3);
    EXPECT_EQ(c.initial.uniform_u[1], -0.25);
    EXPECT_TRUE(c.write_vtu);
    EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, Overrides)
{
    const auto c = parse_config(R"({"preset":"experiment1","level":2,"tau":0.002,"t_final":0.01})");
    EXPECT_EQ(c.preset, Preset::experiment1);
    EXPECT_EQ(c.level, 2);
    EXPECT_EQ(c.solver.tau, 0.002);
    EXPECT_EQ(c.params.V, (std::vector<double>{0.35, 0.35, 0.8}));
    const auto b = parse_config(R"({"preset":"convergence2","variant":"B"})");
    EXPECT_EQ(b.params.V, (std::vector<double>{0.5, 0.5}));
}

TEST(Config, ErrorsNameTheKey)
{
    EXPECT_EQ(key_of(R"({"preset":"custom","bogus":1})"), "bogus");
    EXPECT_EQ(key_of(R"({"preset":"experiment1","n_components":2})"), "n_components");
    EXPECT_EQ(key_of(R"({"preset":"experiment2","V":[0.3,0.3,0.4]})"), "V");
    EXPECT_EQ(key_of(R"({"preset":"nonsense"})"), "preset");
    EXPECT_EQ(key_of(R"({"level":0})"), "level");
    EXPECT_EQ(key_of(R"({"level":13})"), "level");
    EXPECT_EQ(key_of(R"({"tau":-1})"), "tau");
    EXPECT_EQ(key_of(R"({"tau":"small"})"), "tau");
    EXPECT_EQ(key_of(R"({"t_final":0.0001})"), "t_final");
    EXPECT_EQ(key_of(R"({"nu":0})"), "nu");
    EXPECT_EQ(key_of(R"({"damping":1.5})"), "damping");
    EXPECT_EQ(key_of(R"({"snapshot_times":[0.5]})"), "snapshot_times");
    EXPECT_EQ(key_of(R"({"preset":"custom","uniform_rho":[1.0,2.0]})"), "uniform_rho");
    EXPECT_EQ(key_of(R"({"preset":"experiment1","variant":"A"})"), "variant");
    EXPECT_EQ(key_of(R"({"preset":"custom","n_components":3,"V":[0.3,0.3,0.4],"initial_data":"convergence2"})"),
              "initial_data");
    EXPECT_EQ(key_of("{\"level\": 3"), "<document>");
    EXPECT_EQ(key_of("[1,2]"), "<document>");
    EXPECT_THROW((void)load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Output, FormatDoubleRoundTrips)
{
    std::mt19937 gen(9);
    for (double v : oracle::random_vector(gen, 200, -1e3, 1e3)) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(snapshot_stem(0.02), "fields_0.020000");
}

TEST(Output, FieldsCsvRoundTrip)
{
    const fem::Discretization d(4);
    std::mt19937 gen(10);
    scheme::State s;
    for (int i = 0; i < 3; ++i) {
        s.rho.push_back(oracle::random_vector(gen, d.p1().ndof(), 0.1, 2.0));
        s.mu.push_back(oracle::random_vector(gen, d.p1().ndof()));
    }
    s.u = oracle::random_vector(gen, 2 * d.p2().ndof());
    s.p = oracle::random_vector(gen, d.p1().ndof());
    const auto dir = scratch("fields");
    write_fields_csv(dir / "f.csv", d, s);
    const auto r = read_fields_csv(dir / "f.csv");
    EXPECT_EQ(r.rho, s.rho);
    EXPECT_EQ(r.mu, s.mu);
    EXPECT_EQ(r.u, s.u);
    EXPECT_EQ(r.p, s.p);

    const auto lines = read_lines(dir / "f.csv");
    ASSERT_EQ(lines.size(), 1u + d.p1().ndof() + d.p2().ndof());
    EXPECT_EQ(lines[0], "kind,index,x,y,rho_1,rho_2,rho_3,rho,p,mu_1,mu_2,mu_3,u_x,u_y");
    for (std::size_t k = 1; k < lines.size(); ++k) EXPECT_EQ(split(lines[k]).size(), 14u) << lines[k];
}

TEST(Output, UniformStateGivesConstantColumns)
{
    const fem::Discretization d(4);
    const model::MixtureParams prm{2, {0.3, 0.7}, 1e-3, 0.0, 1.0};
    const auto s = scheme::initial_state({scheme::InitialData::uniform, {1.0}, {0.2, 0.0}}, prm, d);
    const auto dir = scratch("uniform");
    write_fields_csv(dir / "f.csv", d, s);
    const auto lines = read_lines(dir / "f.csv");
    std::set<std::string> rho1, rho, ux;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto c = split(lines[k]);
        if (c[0] == "p1") {
            rho1.insert(c[4]);
            rho.insert(c[6]);
        } else {
            ux.insert(c[10]);
        }
    }
    EXPECT_EQ(rho1.size(), 1u);
    EXPECT_EQ(rho.size(), 1u);
    EXPECT_EQ(std::stod(*rho.begin()), 2.0);
    ASSERT_EQ(ux.size(), 1u);
    EXPECT_EQ(std::stod(*ux.begin()), 0.2);
}

TEST(Output, ReadRejectsMalformedFiles)
{
    const auto dir = scratch("bad");
    EXPECT_THROW((void)read_fields_csv(dir / "missing.csv"), OutputError);
    std::ofstream(dir / "bad.csv") << "kind,index,x,y\np1,0,0,0\n";
    EXPECT_THROW((void)read_fields_csv(dir / "bad.csv"), OutputError);
}

TEST(Output, EocCsvHasEmptyUndefinedEntries)
{
    EocTable t;
    t.rows = {{1, 0.1, 0.2, 0.3, 0.4}, {2, 0.025, 0.05, 0.075, 0.1}};
    t.eoc_rho = {std::nullopt, 2.0};
    t.eoc_mu = {std::nullopt, 2.0};
    t.eoc_u = {std::nullopt, 2.0};
    t.eoc_p = {std::nullopt, 2.0};
    t.max_div_defect = {1e-3, 2e-4};
    const auto dir = scratch("eoc");
    write_eoc_csv(dir / "eoc.csv", t);
    const auto lines = read_lines(dir / "eoc.csv");
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "level,err_rho,eoc_rho,err_mu,eoc_mu,err_u,eoc_u,err_p,eoc_p,max_div_defect");
    const auto first = split(lines[1]);
    ASSERT_EQ(first.size(), 10u);
    EXPECT_EQ(first[0], "1");
    EXPECT_EQ(first[2], "");
    EXPECT_EQ(first[8], "");
    EXPECT_EQ(std::stod(split(lines[2])[2]), 2.0);
}

TEST(Experiment, ExperimentOneInitialDensity)
{
    auto c = preset_defaults(Preset::experiment1);
    c.level = 2;
    c.solver.t_final = c.solver.tau;
    c.snapshot_times = {0.0};
    c.output_dir = scratch("exp1");
    const auto r = run_experiment(c);
    ASSERT_FALSE(r.failure.has_value()) << *r.failure;
    const auto lines = read_lines(c.output_dir / (snapshot_stem(0.0) + ".csv"));
    std::set<double> rho1;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto cells = split(lines[k]);
        if (cells[0] == "p1") rho1.insert(std::stod(cells[4]));
    }
    EXPECT_EQ(rho1, (std::set<double>{0.2, 1.1}));
}

TEST(Experiment, SingleStepRunFiles)
{
    auto c = preset_defaults(Preset::convergence2);
    c.level = 1;
    c.solver.t_final = c.solver.tau;
    c.write_vtu = true;
    c.snapshot_times = {c.solver.tau};
    c.output_dir = scratch("single");
    const auto r = run_experiment(c);
    ASSERT_FALSE(r.failure.has_value());
    EXPECT_TRUE(r.invariants_pass);
    EXPECT_EQ(r.steps_completed, 1);
    ASSERT_EQ(r.diagnostics.size(), 2u);

    const auto csv = read_lines(c.output_dir / "diagnostics.csv");
    ASSERT_EQ(csv.size(), 2u);
    EXPECT_EQ(split(csv[0]).front(), "step");
    EXPECT_EQ(split(csv[1]).front(), "1");

    const auto j = nlohmann::json::parse(read_file(c.output_dir / "summary.json"));
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["steps_completed"], 1);
    EXPECT_TRUE(j["all_invariants_pass"].get<bool>());
    EXPECT_TRUE(j.contains("initial"));
    EXPECT_GE(j["invariants"].size(), 7u);

    EXPECT_EQ(parse_config(read_file(c.output_dir / "config.json")), c);
    const auto stem = c.output_dir / snapshot_stem(c.solver.tau);
    EXPECT_TRUE(fs::exists(stem.string() + ".csv"));
    const auto vtu = read_file(stem.string() + ".vtu");
    EXPECT_NE(vtu.find("<VTKFile type=\"UnstructuredGrid\""), std::string::npos);
    EXPECT_NE(vtu.find("Name=\"velocity\""), std::string::npos);
}

TEST(Experiment, NewtonFailureIsReported)
{
    auto c = preset_defaults(Preset::experiment1);
    c.level = 1;
    c.solver.t_final = 2 * c.solver.tau;
    c.solver.newton_max_iter = 1;
    clip_snapshot_times(c);
    c.output_dir = scratch("fail");
    const auto r = run_experiment(c);
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_EQ(r.steps_completed, 0);
    const auto j = nlohmann::json::parse(read_file(c.output_dir / "summary.json"));
    EXPECT_EQ(j["status"], "solver_failure");
}

TEST(Convergence, TableForTwoLevels)
{
    auto c = preset_defaults(Preset::convergence2);
    c.solver.t_final = 4 * c.solver.tau;
    c.output_dir = scratch("conv");
    const auto r = run_convergence(c, {1, 2}, 3);
    ASSERT_FALSE(r.failure.has_value());
    ASSERT_EQ(r.table.rows.size(), 2u);
    EXPECT_EQ(r.table.rows[0].level, 1);
    EXPECT_FALSE(r.table.eoc_rho[0].has_value());
    ASSERT_TRUE(r.table.eoc_rho[1].has_value());
    EXPECT_GT(r.table.rows[0].err_rho, r.table.rows[1].err_rho);
    EXPECT_GT(*r.table.eoc_rho[1], 1.0);
    EXPECT_TRUE(fs::exists(c.output_dir / "eoc_table.csv"));
    EXPECT_TRUE(fs::exists(c.output_dir / "level_1" / "summary.json"));

    const auto single = run_convergence(c, {2}, 3);
    ASSERT_EQ(single.table.rows.size(), 1u);
    EXPECT_FALSE(single.table.eoc_u[0].has_value());
    EXPECT_THROW((void)run_convergence(c, {2, 1}, 3), ConfigError);
    EXPECT_THROW((void)run_convergence(c, {1, 3}, 3), ConfigError);
}
