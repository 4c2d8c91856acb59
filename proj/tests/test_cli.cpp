// End-to-end checks of the abtt binary: exit codes, file outputs, determinism.
// The binary path comes from ABTT_BIN (set by ctest).

#include "abtt/embedding.hpp"
#include "abtt/postprocess.hpp"
#include "abtt/synth.hpp"

#include "json.hpp"
#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace abtt;
using testutil::TempDir;
using testutil::write_file;

namespace {

std::string binary() {
    const char* env = std::getenv("ABTT_BIN");
    return env ? env : "build/tools/abtt";
}

int run(const std::string& args, const std::string& log_path) {
    std::string command = binary() + " " + args + " >" + log_path + ".out 2>" + log_path + ".err";
    int status = std::system(command.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli happy path: synth, postprocess, eval") {
    TempDir dir;
    REQUIRE(run("synth --vocab 400 --dim 40 --d-star 2 --mu-scale 0.3 --alpha-bound 3"
                " --seed 3 --out " + dir.file("syn"), dir.file("log1")) == 0);

    REQUIRE(run("postprocess --input " + dir.file("syn.embeddings.txt") + " --output " +
                dir.file("proc.txt") + " --d-null 2 --mode strict --model-out " +
                dir.file("model.json"), dir.file("log2")) == 0);

    EmbeddingSet processed = load_embeddings(dir.file("proc.txt"));
    CHECK(processed.size() == 400);
    CHECK(processed.dim() == 40);
    double avg_norm = processed.matrix.rowwise().norm().mean();
    CHECK(compute_mean(processed).norm() < 1e-6 * avg_norm);

    REQUIRE(run("eval --task sim --embeddings " + dir.file("syn.embeddings.txt") + " --data " +
                dir.file("syn.sim.tsv") + " --post-model " + dir.file("model.json") +
                " --report " + dir.file("report.json"), dir.file("log3")) == 0);
    auto report = nlohmann::json::parse(slurp(dir.file("report.json")));
    CHECK(report.at("task") == "sim");
    CHECK(report.at("D") == 2);
    CHECK(report.at("mode") == "strict");
    CHECK(report.at("proc").get<double>() > report.at("orig").get<double>());
}

TEST_CASE("cli reports are byte-identical across reruns") {
    TempDir dir;
    REQUIRE(run("synth --vocab 300 --dim 30 --d-star 2 --seed 5 --out " + dir.file("s"),
                dir.file("log1")) == 0);
    std::string args = "eval --task sim --embeddings " + dir.file("s.embeddings.txt") +
                       " --data " + dir.file("s.sim.tsv") + " --d-null 2 --mode strict --seed 9";
    REQUIRE(run(args + " --report " + dir.file("a.json"), dir.file("log2")) == 0);
    REQUIRE(run(args + " --report " + dir.file("b.json"), dir.file("log3")) == 0);
    CHECK(slurp(dir.file("a.json")) == slurp(dir.file("b.json")));
}

TEST_CASE("cli usage errors exit with 1") {
    TempDir dir;
    CHECK(run("--no-such-flag", dir.file("log1")) == 1);
    CHECK(run("postprocess --input x", dir.file("log2")) == 1);  // missing --output
    CHECK(run("", dir.file("log3")) == 1);                       // subcommand required
    CHECK(run("eval --task bogus --embeddings x --data y", dir.file("log4")) == 1);
    CHECK(run("--version", dir.file("log5")) == 0);
}

TEST_CASE("cli refuses to overwrite its input") {
    TempDir dir;
    auto path = write_file(dir.file("e.txt"), "2 2\na 1 0\nb 0 1\n");
    CHECK(run("postprocess --input " + path + " --output " + path + " --d-null 1",
              dir.file("log")) == 1);
    CHECK(slurp(dir.file("e.txt")) == "2 2\na 1 0\nb 0 1\n");  // untouched
}

TEST_CASE("cli data errors exit with 2") {
    TempDir dir;
    auto bad = write_file(dir.file("bad.txt"), "a 1 2\nb 1\n");
    CHECK(run("inspect " + bad, dir.file("log1")) == 2);
    CHECK(run("inspect " + dir.file("missing.txt"), dir.file("log2")) == 2);
}

TEST_CASE("cli numerical errors exit with 3") {
    TempDir dir;
    auto embeddings = write_file(dir.file("e.txt"), "3 2\na 1 0\nb 0 1\nc 1 1\n");
    auto oov = write_file(dir.file("oov.tsv"), "zz\tyy\t1.0\nqq\tall\t2.0\n");
    CHECK(run("eval --task sim --embeddings " + embeddings + " --data " + oov + " --d-null 1",
              dir.file("log")) == 3);
}

TEST_CASE("cli diagnose writes the report and tsv tables") {
    TempDir dir;
    REQUIRE(run("synth --vocab 300 --dim 30 --d-star 1 --freq-link --seed 4 --out " +
                dir.file("s"), dir.file("log1")) == 0);
    REQUIRE(run("diagnose --embeddings " + dir.file("s.embeddings.txt") + " --freqs " +
                dir.file("s.freq.txt") + " --d-null 1 --mode strict --partition-samples 64" +
                " --out " + dir.file("diag.json") + " --tsv", dir.file("log2")) == 0);
    auto report = nlohmann::json::parse(slurp(dir.file("diag.json")));
    CHECK(report.contains("geometry"));
    CHECK(report.contains("partition"));
    CHECK(report.contains("frequency"));
    CHECK(report.contains("processed"));
    CHECK(report.at("partition").at("n_samples") == 64);
    CHECK(!slurp(dir.file("diag.json.spectrum.tsv")).empty());
    CHECK(!slurp(dir.file("diag.json.partition.tsv")).empty());
    CHECK(!slurp(dir.file("diag.json.frequency.tsv")).empty());
}

TEST_CASE("cli sweep emits one row per candidate") {
    TempDir dir;
    REQUIRE(run("synth --vocab 400 --dim 30 --d-star 2 --seed 6 --out " + dir.file("s"),
                dir.file("log1")) == 0);
    REQUIRE(run("sweep --embeddings " + dir.file("s.embeddings.txt") +
                " --d-values 0,1,2,3 --objective flatness --mode strict --report " +
                dir.file("sweep.json"), dir.file("log2")) == 0);
    auto report = nlohmann::json::parse(slurp(dir.file("sweep.json")));
    REQUIRE(report.at("rows").size() == 4);
    CHECK(report.at("rows")[0].at("D") == 0);
    CHECK(report.at("score") == "spectrum_flatness");
}

TEST_CASE("cli logs version, config, and seed for reproducibility") {
    TempDir dir;
    auto embeddings = write_file(dir.file("e.txt"), "2 2\na 1 0\nb 0 1\n");
    REQUIRE(run("inspect " + embeddings, dir.file("log")) == 0);
    auto err = slurp(dir.file("log.err"));
    auto entry = nlohmann::json::parse(err.substr(0, err.find('\n')));
    CHECK(entry.contains("version"));
    CHECK(entry.at("command") == "inspect");
    CHECK(entry.at("seed") == 0);
    CHECK(entry.at("config").at("embeddings") == embeddings);
}
