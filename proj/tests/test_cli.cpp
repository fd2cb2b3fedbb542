#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" RANKPRIOR_CLI_PATH "\" " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "rankprior_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

}  // namespace

TEST_CASE("rank keeps input order for tied posterior means") {
    auto f = scratch("tie.csv", "id,estimate,stderr\na,1.0,0.5\nb,2.0,0.5\nc,1.0,0.5\n");
    auto r = run("rank --input " + f.string() + " --prior normal:tau=1");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string header, l1, l2, l3;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(header == "id,x,sigma,posterior_mean,rank");
    CHECK(l1.rfind("b,", 0) == 0);
    CHECK(l2.rfind("a,", 0) == 0);
    CHECK(l3.rfind("c,", 0) == 0);
    CHECK(l1.substr(l1.rfind(',') + 1) == "1");
    CHECK(l3.substr(l3.rfind(',') + 1) == "3");
    // b: tau^2 x / (tau^2 + sigma^2) = 2 / 1.25
    std::istringstream cols(l1);
    std::string id, x, s, pm;
    std::getline(cols, id, ',');
    std::getline(cols, x, ',');
    std::getline(cols, s, ',');
    std::getline(cols, pm, ',');
    CHECK(std::stod(pm) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("rank json output parses") {
    auto f = scratch("json.csv", "u1,0.3,0.1\nu2,-0.2,0.2\nu3,0.9,0.3\n");
    auto r = run("rank --input " + f.string() + " --prior exponential:rate=2 --format json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j.dump().find("u3") != std::string::npos);
}

TEST_CASE("fit-prior exponential on noiseless tail matches the closed form") {
    // Ten values 1..10; the 0.9 type-7 quantile is 9.1, so the tail is {10}.
    std::string csv = "id,estimate,stderr\n";
    for (int i = 1; i <= 10; ++i) csv += "u" + std::to_string(i) + "," + std::to_string(i) + ",1e-12\n";
    auto f = scratch("noiseless.csv", csv);
    auto r = run("fit-prior --family exponential --tail-quantile 0.5 --format json --input " + f.string());
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    // a = 5.5, tail {6..10}: rate = 5 / sum(x - a) = 5 / 12.5
    CHECK(j.at("params").at("rate").get<double>() == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("isotax normal curve is a straight line through (0, -tau^2)") {
    std::string csv;
    for (int i = 0; i < 20; ++i)
        csv += "u" + std::to_string(i) + "," + std::to_string(0.1 * i - 0.7) + "," + std::to_string(0.05 + 0.02 * i) + "\n";
    auto f = scratch("iso.csv", csv);
    auto r = run("isotax --input " + f.string() + " --prior normal:tau=0.5 --levels 0.1 --points 5");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> pts;
    while (std::getline(in, line)) {
        std::istringstream cols(line);
        std::string c, frac, x, v;
        std::getline(cols, c, ',');
        std::getline(cols, frac, ',');
        std::getline(cols, x, ',');
        std::getline(cols, v, ',');
        pts.emplace_back(std::stod(x), std::stod(v));
    }
    REQUIRE(pts.size() == 5);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double slope = (pts[i].second - pts[0].second) / (pts[i].first - pts[0].first);
        CHECK(pts[0].second - slope * pts[0].first == doctest::Approx(-0.25).epsilon(1e-8));
    }
}

TEST_CASE("loss-table json parses and has nine cells") {
    auto r = run("loss-table --format json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    std::size_t bayes = 0;
    for (const auto& row : j)
        if (row.at("est_family") != "point_estimate") ++bayes;
    CHECK(bayes == 9);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("").code == 1);
    CHECK(run("rank").code == 1);
    CHECK(run("no-such-command").code == 1);
    CHECK(run("rank --input /nonexistent/file.csv --prior npmle").code == 1);
    auto f = scratch("bad.csv", "id,estimate,stderr\na,1,-1\n");
    CHECK(run("rank --input " + f.string() + " --prior npmle").code == 1);
    auto g = scratch("ok.csv", "a,1,1\nb,2,1\n");
    CHECK(run("rank --input " + g.string() + " --prior weird:tau=1").code == 1);
    CHECK(run("rank --input " + g.string() + " --prior normal:tau=-1").code == 1);
}

TEST_CASE("simulate output is identical across runs and thread counts") {
    auto cfg = scratch("sim.json",
                       R"({"sizes":[200],"replicates":[3],"modes":["optimal","tail_mle"],"seed":7})");
    auto a = run("simulate --quiet --config " + cfg.string());
    auto b = run("simulate --quiet --config " + cfg.string());
    auto c = run("simulate --quiet --config " + cfg.string(), "RANKPRIOR_THREADS=1");
    REQUIRE(a.code == 0);
    CHECK(!a.out.empty());
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    auto d = run("simulate --quiet --seed 8 --config " + cfg.string());
    CHECK(d.out != a.out);
}

TEST_CASE("numerical failures exit with code 2") {
    // Noise dwarfs the spread above the cutoff, so the normal tail score never changes sign.
    std::string csv = "id,estimate,stderr\n";
    for (int i = 1; i <= 10; ++i) csv += "u" + std::to_string(i) + "," + std::to_string(i) + ",100\n";
    auto f = scratch("noisy.csv", csv);
    CHECK(run("fit-prior --family normal --tail-quantile 0.5 --input " + f.string()).code == 2);
    CHECK(run("rank --prior fit-tail:normal --tail-quantile 0.5 --input " + f.string()).code == 2);
}
