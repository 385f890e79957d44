// End-to-end checks of the erl binary: exit codes, catalog listing, config
// diagnostics, output artifacts, and byte-level reproducibility.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("erl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

// Runs the binary with the given arguments, captures stdout/stderr into the
// scratch dir, and returns the process exit code.
int run_cli(const std::string& args, const fs::path& dir, std::string* out = nullptr,
            std::string* err = nullptr) {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = std::string(ERL_BIN) + " " + args + " > " + out_file.string() +
                            " 2> " + err_file.string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    if (out != nullptr) *out = slurp(out_file);
    if (err != nullptr) *err = slurp(err_file);
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("list prints a stable catalog", "[cli]") {
    const fs::path dir = scratch_dir("list");
    std::string text;
    REQUIRE(run_cli("list", dir, &text) == 0);

    std::istringstream lines(text);
    std::vector<std::string> names;
    for (std::string line; std::getline(lines, line);) {
        if (line.empty()) continue;
        names.push_back(line.substr(0, line.find(' ')));
    }
    REQUIRE(names.size() >= 6);
    for (const char* expected : {"cantor", "dichotomy", "cluster", "tower", "catmap", "audit",
                                 "custom"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());

    std::string again;
    REQUIRE(run_cli("list", dir, &again) == 0);
    CHECK(again == text);

    std::string json_text;
    REQUIRE(run_cli("list --json", dir, &json_text) == 0);
    const nlohmann::json catalog = nlohmann::json::parse(json_text);
    REQUIRE(catalog.is_array());
    REQUIRE(catalog.size() == names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        CHECK(catalog[i]["name"].get<std::string>() == names[i]);
        CHECK_FALSE(catalog[i]["description"].get<std::string>().empty());
    }
    fs::remove_all(dir);
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
    const fs::path dir = scratch_dir("usage");
    CHECK(run_cli("frobnicate", dir) == 1);
    CHECK(run_cli("list --frobnicate", dir) == 1);
    CHECK(run_cli("", dir) == 1);

    std::string help_text;
    CHECK(run_cli("--help", dir, &help_text) == 0);
    CHECK(help_text.find("list") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("config diagnostics point at the problem", "[cli]") {
    const fs::path dir = scratch_dir("config");

    const fs::path bad = dir / "bad.json";
    spit(bad, "{\n  \"T\": 5,,\n}\n");
    std::string err;
    CHECK(run_cli("custom --config " + bad.string(), dir, nullptr, &err) == 1);
    CHECK(err.find("config parse error") != std::string::npos);
    CHECK(err.find("line 2") != std::string::npos);
    CHECK(err.find("column") != std::string::npos);

    const fs::path arr = dir / "arr.json";
    spit(arr, "[1, 2, 3]\n");
    err.clear();
    CHECK(run_cli("custom --config " + arr.string(), dir, nullptr, &err) == 1);
    CHECK(err.find("JSON object") != std::string::npos);

    err.clear();
    CHECK(run_cli("custom --config " + (dir / "missing.json").string(), dir, nullptr, &err) == 1);
    CHECK(err.find("cannot open") != std::string::npos);

    const fs::path unknown = dir / "unknown.json";
    spit(unknown,
         R"({"system": "doubling", "hole": {"depth": 1, "words": ["0"]}, "bogus": 1})");
    err.clear();
    CHECK(run_cli("custom --config " + unknown.string(), dir, nullptr, &err) == 1);
    CHECK(err.find("bogus") != std::string::npos);

    err.clear();
    CHECK(run_cli("custom", dir, nullptr, &err) == 1); // system and hole are required
    CHECK_FALSE(err.empty());
    fs::remove_all(dir);
}

TEST_CASE("custom scenario writes artifacts and exits 0", "[cli]") {
    const fs::path dir = scratch_dir("custom");
    const fs::path cfg = dir / "cfg.json";
    spit(cfg,
         R"({"system": "doubling", "hole": {"depth": 1, "words": ["0"]}, "T": 20, "K": 5, "L": 6})");

    const fs::path out = dir / "artifacts" / "nested";
    std::string text;
    REQUIRE(run_cli("custom --config " + cfg.string() + " --out " + out.string(), dir, &text) ==
            0);
    CHECK(text.find("scenario custom: 0/0 checks passed") != std::string::npos);

    REQUIRE(fs::exists(out / "results.csv"));
    REQUIRE(fs::exists(out / "summary.json"));
    REQUIRE(fs::exists(out / "manifest.json"));

    const nlohmann::json summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary["scenario"] == "custom");
    CHECK(summary["all_checks_pass"].get<bool>());
    CHECK(summary["checks"].is_array());
    CHECK(summary["checks"].empty());

    const std::string csv = slurp(out / "results.csv");
    CHECK(csv.rfind("t,survival,survival_conditional\n", 0) == 0);

    std::string json_text;
    REQUIRE(run_cli("custom --config " + cfg.string() + " --out " + out.string() + " --json",
                    dir, &json_text) == 0);
    const nlohmann::json echoed = nlohmann::json::parse(json_text);
    CHECK(echoed["all_checks_pass"].get<bool>());
    fs::remove_all(dir);
}

TEST_CASE("seed override lands in the manifest", "[cli]") {
    const fs::path dir = scratch_dir("seed");
    const fs::path cfg = dir / "cfg.json";
    spit(cfg, R"({"system": "doubling", "hole": {"depth": 1, "words": ["0"]}, "T": 5})");

    const fs::path out = dir / "out";
    REQUIRE(run_cli("custom --config " + cfg.string() + " --seed 777 --out " + out.string(),
                    dir) == 0);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["artifact_version"] == "1.0");
    CHECK(manifest["scenario"] == "custom");
    CHECK(manifest["config"]["seed"].get<std::uint64_t>() == 777);
    fs::remove_all(dir);
}

TEST_CASE("repeated runs produce byte-identical artifacts", "[cli]") {
    const fs::path dir = scratch_dir("repro");
    const fs::path cfg = dir / "cfg.json";
    spit(cfg,
         R"({"system": "golden_mean", "hole": {"depth": 2, "words": ["10"]}, "T": 30, "seed": 5})");

    const fs::path out1 = dir / "run1";
    const fs::path out2 = dir / "run2";
    REQUIRE(run_cli("custom --config " + cfg.string() + " --out " + out1.string(), dir) == 0);
    REQUIRE(run_cli("custom --config " + cfg.string() + " --out " + out2.string(), dir) == 0);
    CHECK(slurp(out1 / "results.csv") == slurp(out2 / "results.csv"));
    CHECK(slurp(out1 / "summary.json") == slurp(out2 / "summary.json"));
    CHECK(slurp(out1 / "manifest.json") == slurp(out2 / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("failing checks exit with code 2", "[cli]") {
    const fs::path dir = scratch_dir("fail");
    const fs::path cfg = dir / "cfg.json";
    // A truncation level far below the return window leaves visible mass in
    // the cluster-size tail, so the mean-size identity check must fail.
    spit(cfg, R"({"n": 6, "K": 12, "L": 8})");

    std::string text;
    const int rc = run_cli("cluster --config " + cfg.string() + " --out " +
                               (dir / "out").string(),
                           dir, &text);
    CHECK(rc == 2);
    CHECK(text.find("FAIL") != std::string::npos);
    CHECK(text.find("checks passed") != std::string::npos);
    fs::remove_all(dir);
}
