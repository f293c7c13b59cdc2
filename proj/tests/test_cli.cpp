// Drives the installed binary through popen and checks the exit-code
// contract, report determinism, and the file formats end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string binary() {
    const char* p = std::getenv("CURVLAB_BIN_PATH");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = binary() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/curvlab_cli_") + name;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("gen + validate round trip, exit 0") {
    auto g = tmp_path("torus.g");
    auto r = run("gen --cayley torus --dims 1 --mod 5 -o " + g);
    CHECK(r.exit_code == 0);
    auto v = run("--deterministic validate " + g);
    CHECK(v.exit_code == 0);
    CHECK(v.out.find("\"connected\": true") != std::string::npos);
    CHECK(v.out.find("\"output_digest\"") != std::string::npos);
}

TEST_CASE("validate rejects broken input with exit 2") {
    auto g = tmp_path("bad.g");
    write_file(g,
               "format kernel\nmode markov\n"
               "vertex a 1\nvertex b 2\nedge a b 1 1\n");  // not reversible
    auto r = run("validate " + g);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("reversibility") != std::string::npos);

    auto miss = run("validate /nonexistent/file");
    CHECK(miss.exit_code == 2);
}

TEST_CASE("deterministic reports are byte-identical") {
    auto g = tmp_path("det.g");
    run("gen --conductance-random --max-vertices 15 -o " + g + " --seed 7");
    auto a = run("--deterministic --seed 7 validate " + g);
    auto b = run("--deterministic --seed 7 validate " + g);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
}

TEST_CASE("curvature verdicts map to exit codes 0 and 3") {
    auto g = tmp_path("two.g");
    write_file(g,
               "format kernel\nmode markov\n"
               "vertex a 1\nvertex b 1\nedge a b 1 1\n");
    auto good = run("--deterministic curvature " + g +
                    " --n 2 --k 0.99 --oracle-trials 200");
    CHECK(good.exit_code == 0);
    CHECK(good.out.find("\"satisfied\": true") != std::string::npos);
    auto bad = run("--deterministic curvature " + g +
                   " --n 2 --k 1.01 --oracle-trials 200");
    CHECK(bad.exit_code == 3);
    auto prof = run("--deterministic curvature " + g + " --n inf --profile");
    CHECK(prof.exit_code == 0);
    CHECK(prof.out.find("\"k_inf_graph\": 1.999999999999") != std::string::npos);
}

TEST_CASE("heat audit refuses a curvature hypothesis the graph lacks") {
    auto g = tmp_path("h.g");
    run("gen --cayley torus --dims 1 --mod 5 -o " + g);
    auto ok = run("--deterministic heat " + g + " --t 0.5 --audit 0,2 --corpus 2");
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("gammapt2bis") != std::string::npos);
    auto refused = run("--deterministic heat " + g + " --t 0.5 --audit 5,2");
    CHECK(refused.exit_code == 5);
    CHECK(refused.out.find("vacuous") != std::string::npos);
}

TEST_CASE("modified-heat solves, verifies, and writes the csv trace") {
    auto g = tmp_path("mh.g");
    write_file(g,
               "format kernel\nmode markov\n"
               "vertex a 1\nvertex b 1\nedge a b 1 1\n");
    auto u0 = tmp_path("u0.txt");
    write_file(u0, "b 0.9\n");  // ||Gamma u0|| = 0.405 < 1/2
    auto csv = tmp_path("trace.csv");
    // t_local = 1/(256 * 0.405); horizon = t_local / 2, step = horizon / 8
    auto r = run("--deterministic modified-heat " + g + " --u0 " + u0 +
                 " --horizon 0.0048225308641975306 --step 0.0006028163580246913" +
                 " --method both --verify decay,oscillation,comparison" +
                 " --gamma 0.5,8 --csv " + csv);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"oracle_deviation\"") != std::string::npos);
    CHECK(r.out.find("\"admissible\": true") != std::string::npos);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,vertex,u,gamma_u,delta_u");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 2 * 9);  // 9 grid nodes x 2 vertices
}

TEST_CASE("modified-heat refuses inadmissible data for oscillation, exit 5") {
    auto g = tmp_path("mh2.g");
    write_file(g,
               "format kernel\nmode markov\n"
               "vertex a 1\nvertex b 1\nedge a b 1 1\n");
    auto u0 = tmp_path("u0big.txt");
    write_file(u0, "b 1.5\n");  // ||Gamma u0|| = 1.125 >= 1/2
    auto r = run("--deterministic modified-heat " + g + " --u0 " + u0 +
                 " --horizon 0.002 --step 0.0005 --verify oscillation");
    CHECK(r.exit_code == 5);
    CHECK(r.out.find("vacuous") != std::string::npos);
}

TEST_CASE("gen emits the documented text format") {
    auto r = run("gen --cayley cyclic --mod 4 --mode unnormalized");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("format kernel") != std::string::npos);
    CHECK(r.out.find("mode unnormalized") != std::string::npos);
    auto z = run("gen --example-z-nonh2 --radius 6");
    CHECK(z.exit_code == 0);
    CHECK(z.out.find("mode unnormalized") != std::string::npos);
}
