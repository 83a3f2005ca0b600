// Drives the command-line tool as a subprocess.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = PFLOC_CLI_PATH;
const fs::path kConfigs = PFLOC_CONFIG_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class Sandbox {
public:
    explicit Sandbox(const std::string& name) : dir_(fs::temp_directory_path() / ("pfloc_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Sandbox() { fs::remove_all(dir_); }

    [[nodiscard]] const fs::path& dir() const { return dir_; }
    [[nodiscard]] fs::path operator/(const std::string& name) const { return dir_ / name; }

    Result run(const std::string& args) const {
        std::string cmd = "cd '" + dir_.string() + "' && '" + kCli.string() + "' " + args + " > stdout.txt 2> stderr.txt";
        int status = std::system(cmd.c_str());
        int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return {code, slurp(dir_ / "stdout.txt"), slurp(dir_ / "stderr.txt")};
    }

private:
    fs::path dir_;
};

const std::string kSmallConfig = R"({
  "environment": "env.json",
  "grid": {"n_range": 49, "n_depth": 12},
  "scenario": {"duration_s": 120.0, "dropouts": [[40.0, 60.0]]},
  "particles": 800
})";

void write_env(const Sandbox& box) {
    fs::copy_file(kConfigs / "iso_env.json", box / "env.json", fs::copy_options::overwrite_existing);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    Sandbox box("usage");
    CHECK(box.run("").code == 2);
    CHECK(box.run("frobnicate").code == 2);
    CHECK(box.run("track --particles many").code == 2);
    CHECK(box.run("--config missing.json track").code == 2);
    write_env(box);
    auto r = box.run("build-grid --env env.json --n-range 1");
    CHECK(r.code == 2);
    CHECK(r.err.find("usage error") != std::string::npos);
    CHECK(box.run("--help").code == 0);
}

TEST_CASE("build-grid reports path coverage") {
    Sandbox box("grid");
    write_env(box);
    spit(box / "cfg.json", kSmallConfig);
    auto r = box.run("--config cfg.json build-grid");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(box / "grid.bin"));
    CHECK(fs::file_size(box / "grid.bin") == 8 + 4 + 32 + 12 + 4 + 49 * 12 * 4 * 8);
    // Isovelocity water: the direct path exists at every grid point.
    CHECK(r.out.find("DP  impossible fraction 0.000000") != std::string::npos);
    CHECK(r.out.find("SBB impossible fraction") != std::string::npos);

    auto q = box.run("--config cfg.json build-grid --quiet");
    CHECK(q.code == 0);
    CHECK(q.out.find("impossible") == std::string::npos);
}

TEST_CASE("malformed inputs fail with context") {
    Sandbox box("malformed");
    spit(box / "env.json", "{\n  \"ssp\": [[0, 1500], [216.5, 1500]]\n  \"bottom_depth\": 216.5\n}\n");
    auto r = box.run("build-grid --env env.json --n-range 10 --n-depth 5");
    CHECK(r.code == 1);
    CHECK(r.err.find("env.json:3:") != std::string::npos);

    spit(box / "cfg.json", R"({"particles": 10, "partcles": 5})");
    r = box.run("--config cfg.json track");
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key 'partcles'") != std::string::npos);

    r = box.run("track");
    CHECK(r.code == 1);
    CHECK(r.err.find("grid.bin") != std::string::npos);
}

TEST_CASE("simulate, track and evaluate round trip") {
    Sandbox box("pipeline");
    write_env(box);
    spit(box / "cfg.json", kSmallConfig);
    spit(box / "cfg2.json", R"({
  "environment": "env.json", "paths": 2,
  "files": {"estimates": "estimates_k2.csv"},
  "grid": {"n_range": 49, "n_depth": 12},
  "scenario": {"duration_s": 120.0, "dropouts": [[40.0, 60.0]]},
  "particles": 800
})");
    REQUIRE(box.run("--config cfg.json build-grid -q").code == 0);

    auto sim = box.run("--config cfg.json --seed 9 simulate");
    REQUIRE(sim.code == 0);
    auto truth1 = slurp(box / "truth.csv");
    auto obs1 = slurp(box / "observations.jsonl");
    REQUIRE(box.run("--config cfg.json --seed 9 simulate").code == 0);
    CHECK(slurp(box / "truth.csv") == truth1);
    CHECK(slurp(box / "observations.jsonl") == obs1);
    REQUIRE(box.run("--config cfg.json --seed 10 simulate").code == 0);
    CHECK(slurp(box / "observations.jsonl") != obs1);
    REQUIRE(box.run("--config cfg.json --seed 9 simulate").code == 0);

    std::size_t lines = 0;
    for (char c : obs1) lines += c == '\n';
    CHECK(lines == 59 - 10);  // 0..58 at 2.048 s, minus the [40, 60) dropout

    REQUIRE(box.run("--config cfg.json --seed 9 track").code == 0);
    auto est1 = slurp(box / "estimates.csv");
    REQUIRE(box.run("--config cfg.json --seed 9 --threads 2 track").code == 0);
    CHECK(slurp(box / "estimates.csv") == est1);
    CHECK(est1.rfind("time_s,range_m,depth_m,speed_mps,ess\n", 0) == 0);

    REQUIRE(box.run("--config cfg2.json --seed 9 track").code == 0);
    CHECK(fs::exists(box / "estimates_k2.csv"));

    auto ev = box.run("--config cfg.json evaluate --estimates K4=estimates.csv --estimates K2=estimates_k2.csv");
    REQUIRE(ev.code == 0);
    auto report = slurp(box / "report.json");
    CHECK(report.find("\"label\": \"K4\"") != std::string::npos);
    CHECK(report.find("\"label\": \"K2\"") != std::string::npos);

    // The truth scored against itself has zero error.
    std::string as_est = "time_s,range_m,depth_m,speed_mps,ess\n";
    std::istringstream in(truth1);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) as_est += line + ",1\n";
    spit(box / "perfect.csv", as_est);
    ev = box.run("evaluate --estimates perfect.csv --truth truth.csv --report perfect.json");
    REQUIRE(ev.code == 0);
    CHECK(slurp(box / "perfect.json").find("\"rmse_range_m\": 0.0") != std::string::npos);
}

TEST_CASE("zero duration produces empty outputs") {
    Sandbox box("empty");
    spit(box / "cfg.json", R"({"scenario": {"duration_s": 0.0, "dropouts": []}})");
    auto r = box.run("--config cfg.json --out out simulate");
    REQUIRE(r.code == 0);
    CHECK(slurp(box / "out/truth.csv") == "time_s,range_m,depth_m,speed_mps\n");
    CHECK(slurp(box / "out/observations.jsonl").empty());
}

TEST_CASE("show-config prints a reusable configuration") {
    Sandbox box("show");
    auto r = box.run("--seed 77 show-config");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"seed\": 77") != std::string::npos);
    spit(box / "again.json", r.out);
    auto r2 = box.run("--config again.json show-config");
    REQUIRE(r2.code == 0);
    CHECK(r2.out == r.out);
}
