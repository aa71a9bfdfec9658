#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "support.hpp"
#include "wkam/cli.hpp"

using namespace wkam;
using namespace wkam::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("wkam_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out, err;
};

Run weakkam(const std::string& args, const fs::path& dir) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string(WEAKKAM_EXE) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string config(const std::string& name) { return std::string(WEAKKAM_CONFIGS) + "/" + name + ".json"; }

cli::json parse(const std::string& s) { return cli::json::parse(s); }

} // namespace

TEST(Cli, CheckOnCalibratedExample) {
    auto dir = scratch("check");
    auto r = weakkam("check --config " + config("check") + " --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    auto rep = parse(slurp(dir / "check.json"));
    EXPECT_EQ(rep["version"], cli::version);
    EXPECT_EQ(rep["analysis"]["aubry_nodes"], cli::json::parse("[0,1,2,3]"));
    EXPECT_EQ(rep["analysis"]["is_subsolution"], true);
    EXPECT_EQ(slurp(dir / "check.csv").substr(0, 35), "x,u,T_minus_u,T_plus_u,leverage\n0,0");
}

TEST(Cli, TooLargeTIsAPrecondition) {
    auto dir = scratch("bad_t");
    auto r = weakkam("regularize-uniform --config " + config("regularize_uniform_bad_t") + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    auto err = parse(r.err);
    EXPECT_EQ(err["error"], "precondition");
    EXPECT_NE(err["message"].get<std::string>().find("1/K"), std::string::npos);
}

TEST(Cli, IlmanenRowsRespectBounds) {
    auto dir = scratch("ilmanen");
    auto r = weakkam("ilmanen --f \"1-x^2\" --g \"x^2\" --domain interval:-1,1,101 --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream is(dir / "ilmanen.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "x,minus_g,u,f");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        double x, mg, u, f;
        char c;
        std::istringstream ss(line);
        ss >> x >> c >> mg >> c >> u >> c >> f;
        EXPECT_LE(mg, u + 1e-9);
        EXPECT_LE(u, f + 1e-9);
        ++rows;
    }
    EXPECT_EQ(rows, 101u);
}

TEST(Cli, ExpressionSyntaxErrorReportsOffset) {
    auto dir = scratch("syntax");
    auto r = weakkam("check --domain circle:0,1,16 --cost '{\"kind\":\"quadratic\"}' --u \"2*+x\" --out " + dir.string(),
                     dir);
    EXPECT_EQ(r.code, 2);
    auto err = parse(r.err);
    EXPECT_EQ(err["error"], "expression");
    EXPECT_NE(err["message"].get<std::string>().find("offset 2"), std::string::npos);
}

TEST(Cli, UsageAndConfigErrors) {
    auto dir = scratch("usage");
    EXPECT_EQ(weakkam("frobnicate", dir).code, 2);
    EXPECT_EQ(weakkam("check --config /nonexistent.json", dir).code, 2);
    auto r = weakkam("check --domain circle:0,1,16 --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(parse(r.err)["message"].get<std::string>().find("cost"), std::string::npos);
    EXPECT_EQ(weakkam("mollify --domain interval:0,1,16 --u x --eps \"-1\" --out " + dir.string(), dir).code, 2);
}

TEST(Cli, NonSubsolutionIsAPrecondition) {
    auto dir = scratch("nonsub");
    auto r = weakkam("pipeline-uv --domain circle:0,1,32 --cost '{\"kind\":\"quadratic\"}' --u \"sin(2*pi*x)\" --out " +
                         dir.string(),
                     dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(parse(r.err)["error"], "precondition");
}

TEST(Cli, EveryCommandIsDeterministic) {
    const std::pair<const char*, const char*> runs[] = {
        {"check", "check"},           {"regularize-uniform", "regularize_uniform"},
        {"regularize-general", "regularize_general"}, {"pipeline-uv", "pipeline_uv"},
        {"smoothfree", "smoothfree"}, {"aubry", "aubry"},
        {"ilmanen", "ilmanen"},       {"mollify", "mollify"}};
    for (const auto& [cmd, cfg] : runs) {
        auto a = scratch(std::string("det_a_") + cfg), b = scratch(std::string("det_b_") + cfg);
        auto ra = weakkam(std::string(cmd) + " --config " + config(cfg) + " --out " + a.string(), a);
        auto rb = weakkam(std::string(cmd) + " --config " + config(cfg) + " --out " + b.string(), b);
        ASSERT_EQ(ra.code, 0) << cmd << ": " << ra.err;
        EXPECT_EQ(rb.code, 0);
        for (const char* ext : {".csv", ".json"}) {
            const auto fa = slurp(a / (std::string(cmd) + ext)), fb = slurp(b / (std::string(cmd) + ext));
            EXPECT_FALSE(fa.empty()) << cmd << ext;
            EXPECT_EQ(fa, fb) << cmd << ext;
        }
        EXPECT_EQ(ra.out, rb.out);
    }
}

TEST(Cli, MollifyAcceptsItsOwnOutput) {
    auto dir = scratch("mollify_chain");
    auto r1 = weakkam("mollify --config " + config("mollify") + " --out " + dir.string(), dir);
    ASSERT_EQ(r1.code, 0) << r1.err;
    auto dir2 = scratch("mollify_chain2");
    auto r2 = weakkam("mollify --config " + config("mollify") + " --input " + (dir / "mollify.csv").string() + " --out " +
                          dir2.string(),
                      dir2);
    ASSERT_EQ(r2.code, 0) << r2.err;
    // the second pass reads the `result` column of the first
    auto d = interval(257);
    auto first = cli::read_function_csv((dir / "mollify.csv").string(), d, "result");
    auto input2 = cli::read_function_csv((dir2 / "mollify.csv").string(), d, "f");
    EXPECT_EQ(first, input2);
}

TEST(CsvRoundTrip, BitIdentical) {
    Rng rng(81);
    for (auto d : {circle(257, 3.0), interval(100, -2.0, 5.0)}) {
        auto u = random_function(d, rng, -1e3, 1e3);
        auto dir = scratch("roundtrip");
        write_csv((dir / "u.csv").string(), u);
        EXPECT_EQ(read_csv((dir / "u.csv").string(), d), u);
        cli::write_table((dir / "t.csv").string(), d, {{"a", u}, {"result", -u}});
        EXPECT_EQ(cli::read_function_csv((dir / "t.csv").string(), d, "a"), u);
        EXPECT_EQ(cli::read_function_csv((dir / "t.csv").string(), d), -u);
        const auto bytes = slurp(dir / "t.csv");
        EXPECT_EQ(bytes.find('\r'), std::string::npos);
    }
}

TEST(CliParse, DomainsAndCosts) {
    auto d = cli::parse_domain(cli::json("circle:0,2,8"));
    EXPECT_TRUE(d.periodic());
    EXPECT_EQ(d.length(), 2.0);
    EXPECT_EQ(d.size(), 8u);
    auto di = cli::parse_domain(cli::json::parse(R"j({"kind":"interval","origin":-1,"length":2,"n":5})j"));
    EXPECT_FALSE(di.periodic());
    EXPECT_EQ(di.node(4), 1.0);
    EXPECT_THROW(cli::parse_domain(cli::json("torus:0,1,8")), std::invalid_argument);
    EXPECT_THROW(cli::parse_domain(cli::json("circle:0,1")), std::invalid_argument);
    EXPECT_THROW(cli::parse_domain(cli::json("circle:0,1,2.5")), std::invalid_argument);

    cli::RunConfig rc;
    auto c = cli::parse_cost(cli::json::parse(R"j({"kind":"quad_plus_potential","t":0.5,"V":"1+cos(2*pi*x)","W":0})j"), d, rc);
    EXPECT_EQ(c(0, 0), 2.0);
    auto s = cli::parse_cost(cli::json::parse(R"j({"kind":"separable","f":"x","g":"2*x"})j"), d, rc);
    EXPECT_EQ(s(1, 2), 2 * d.node(1) + d.node(2));
    EXPECT_THROW(cli::parse_cost(cli::json::parse(R"j({"kind":"separable","f":"x"})j"), d, rc), std::invalid_argument);
    EXPECT_THROW(cli::parse_cost(cli::json::parse(R"j({"kind":"cubic"})j"), d, rc), std::invalid_argument);
}

TEST(CliParse, MatrixCostFromCsv) {
    auto dir = scratch("matrix");
    {
        std::ofstream os(dir / "c.csv");
        os << "0,1,2\n1,0,1\n2,1,0\n";
    }
    auto d = cli::parse_domain(cli::json("circle:0,3,3"));
    cli::RunConfig rc;
    rc.base_dir = dir;
    auto c = cli::parse_cost(cli::json::parse(R"j({"kind":"matrix","path":"c.csv"})j"), d, rc);
    EXPECT_EQ(c(0, 2), 2.0);
    EXPECT_EQ(c(2, 1), 1.0);
    auto d4 = cli::parse_domain(cli::json("circle:0,4,4"));
    EXPECT_THROW(cli::parse_cost(cli::json::parse(R"j({"kind":"matrix","path":"c.csv"})j"), d4, rc), std::invalid_argument);
}
