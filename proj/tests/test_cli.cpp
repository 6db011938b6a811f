#include "catch_amalgamated.hpp"
#include "oracle.hpp"
#include "rsum/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace rsum;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

std::string cli() {
    const char* p = std::getenv("RSUM_CLI");
    REQUIRE(p != nullptr);
    return p;
}

Run run(const std::string& args) {
    std::string cmd = cli() + " " + args + " 2>/dev/null";
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t k = fread(buf, 1, sizeof buf, f)) out.append(buf, k);
    int st = pclose(f);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

json run_json(const std::string& args, int expect) {
    auto r = run("--json - " + args);
    INFO(args);
    CHECK(r.code == expect);
    auto at = r.out.find('{');
    REQUIRE(at != std::string::npos);
    return json::parse(r.out.substr(at));
}

fs::path scratch() {
    auto d = fs::temp_directory_path() / ("rsum_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("exit codes") {
    CHECK(run("check -l 1,1,1,1,1,1,1,1,1").code == 0);
    CHECK(run("check -l 1,x").code == 2);
    CHECK(run("check").code == 2);
    CHECK(run("check -l 1,2 -w nofile").code == 2);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("eliminate -l 5,4,3,2,1 -m 9").code == 2);
    CHECK(run("t5-bounds -a 0.3,0.3").code == 2);
    CHECK(run("check -w /nonexistent/weights.txt").code == 2);
    CHECK(run("prawitz --a1 0.31 --rigorous --fast").code == 2);
    // a bound the enclosure cannot meet is a violation, not an error
    CHECK(run("prawitz --a1 0.31 --x 1 --T 10 --q 0.4 --bound 0.09").code == 1);
    CHECK(run("verify-case --force-case 3 -l 5,4,1,1").code == 1);
    // a weight vector larger than the case pipelines accept
    CHECK(run("verify-case -l 1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1").code == 2);
}

TEST_CASE("check and dist agree with the oracle") {
    oracle::Gen g(41);
    for (int i = 0; i < 20; ++i) {
        auto w = g.weight_vector(static_cast<std::size_t>(g.uniform(1, 9)), 12, 6);
        std::string list = w.str();
        auto j = run_json("check -l " + list, 0);
        CHECK(j["command"] == "check");
        CHECK(j["verdict"] == "verified");
        Rational V = oracle::variance(w.weights());
        Rational p = oracle::prob(w.weights(), [&](const Rational& x) { return x * x <= V; });
        CHECK(q_from(j["details"]["prob_abs_le_1"]) == p);

        auto d = run_json("dist -l " + list, 0);
        auto ref = oracle::enumerate(w.weights());
        REQUIRE(d["details"]["atoms"].size() == ref.size());
        Rational total = oracle::total(w.n());
        std::size_t k = 0;
        for (const auto& [v, c] : ref) {
            CHECK(q_from(d["details"]["atoms"][k][0]) == v);
            CHECK(q_from(d["details"]["atoms"][k][1]) == Rational(c) / total);
            ++k;
        }
    }
}

TEST_CASE("float input is converted exactly") {
    auto j = run_json("--float check -l 0.5,0.25", 0);
    CHECK(j["inputs"]["weights"][0] == "1/2");
    // weights come back largest first; 0.1 as a double is not 1/10
    auto k = run_json("--float check -l 0.1,0.2", 0);
    CHECK(k["inputs"]["weights"][1] != "1/10");
    auto e = run_json("check -l 0.1,0.2", 0);
    CHECK(e["inputs"]["weights"][1] == "1/10");
}

TEST_CASE("weight files") {
    auto d = scratch();
    auto f = d / "w.txt";
    {
        std::ofstream o(f);
        o << "# nine equal weights\n";
        for (int i = 0; i < 9; ++i) o << "1\n";
    }
    auto j = run_json("check -w " + f.string(), 0);
    CHECK(j["details"]["prob_abs_lt_1"] == "63/128");
    fs::remove_all(d);
}

TEST_CASE("json reports go to files and round-trip") {
    auto d = scratch();
    auto path = d / "rep.json";
    auto r = run("--json " + path.string() + " duality -l 3,2,1 -t 1/2");
    CHECK(r.code == 0);
    std::ifstream in(path);
    REQUIRE(in);
    json j = json::parse(in);
    auto rep = Report::from_json(j);
    CHECK(rep.command == "duality");
    CHECK(rep.verdict == Verdict::verified);
    CHECK(Report::from_json(rep.to_json()) == rep);
    CHECK(q_from(j["details"]["lhs"]) >= q_from(j["details"]["rhs"]));

    // relative paths land under RSUM_OUTPUT_DIR
    ::setenv("RSUM_OUTPUT_DIR", d.c_str(), 1);
    CHECK(run("--json rel.json classify -l 5,2,1").code == 0);
    ::unsetenv("RSUM_OUTPUT_DIR");
    CHECK(fs::exists(d / "rel.json"));

    CHECK_THROWS(verdict_from("maybe"));
    fs::remove_all(d);
}

TEST_CASE("subcommands") {
    auto e = run_json("eliminate -l 5,4,3,2,1 -m 2", 0);
    CHECK(e["details"]["thresholds"].size() == 4);
    CHECK(e["details"]["tail_sum"] == e["details"]["scaled_prob"]);

    auto f = run_json("flips-test -l 5,2,1 -Q 1", 0);
    CHECK(f["details"]["prefix"] == true);
    CHECK(f["details"]["recursive"] == true);

    auto s = run_json("seg-compare -l 5,4,3,2,1 --A 0 --B 20 --C 3 --D 5", 0);
    CHECK(q_from(s["details"]["lhs"]) <= q_from(s["details"]["rhs"]));
    CHECK(run("seg-compare -l 5,4,3,2,1 --A 0 --B 2 --C 3 --D 5").code == 2);

    auto c = run_json("classify -l 40,35,30,28,28,28,28,28,28,28,28", 0);
    CHECK(c["details"]["case"] == 6);

    auto v = run_json("verify-case -l 40,35,30,28,28,28,28,28,28,28,28", 0);
    auto rep = v["details"]["reports"][0];
    CHECK(rep["case"] == 6);
    CHECK(rep["subcase"] == "three-elimination");
    for (const auto& st : rep["steps"]) {
        CHECK(st.contains("id"));
        CHECK(st.contains("kind"));
        CHECK(st["verdict"] == true);
    }

    auto t = run_json("t5-bounds -a 0.34,0.34,0.34,0.34,0.34", 0);
    CHECK(t["details"]["checks"].size() > 0);
}

TEST_CASE("verify-case batches") {
    auto d = scratch();
    auto f = d / "batch.txt";
    {
        std::ofstream o(f);
        o << "1,1,1,1,1,1,1,1\n# comment\n\n40,35,30,28,28,28,28,28,28,28,28\n22,22,22,22,9,9,9,9\n";
    }
    auto j = run_json("verify-case --batch " + f.string(), 0);
    CHECK(j["details"]["reports"].size() == 3);
    CHECK(run("verify-case --batch " + f.string() + " -l 1,1").code == 2);
    fs::remove_all(d);
}

TEST_CASE("prawitz and the net") {
    auto p = run_json("prawitz --a1 0.31 --x 1 --T 10 --q 0.4 --bound 0.09115", 0);
    double lo = p["details"]["total"][0], hi = p["details"]["total"][1];
    CHECK(hi <= 0.09115);
    CHECK(std::fabs((lo + hi) / 2 - 0.09114) <= 2e-5);

    auto n = run_json("verify-net", 0);
    CHECK(n["details"]["argmax"][0] == 0.5);
    CHECK(n["details"]["argmax"][1] == 0.5);
    CHECK(n["details"]["max"].get<double>() <= 0.6597);
    CHECK(n["details"]["certified_bound"].get<double>() <= 0.664);
    CHECK(n["details"]["points"] == 211 * 211);

    auto d = scratch();
    CHECK(run("verify-net --rows-csv " + (d / "rows.csv").string()).code == 0);
    std::ifstream in(d / "rows.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 212);
    fs::remove_all(d);
}

TEST_CASE("verify-certs") {
    auto j = run_json("verify-certs --no-delegates", 0);
    CHECK(j["details"]["passed"] == j["details"]["total"]);
    CHECK(run("verify-certs --catalog /nonexistent").code == 2);
}
