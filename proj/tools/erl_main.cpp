// erl: escape rates and return clustering for open symbolic systems.
//
// Usage:
//   erl <scenario> [--config file.json] [--seed S] [--out dir] [--json]
//   erl list [--json]
//
// Each scenario writes results.csv, summary.json, and manifest.json into the
// output directory (atomically), prints one PASS/FAIL line per named check,
// and exits 0 when every check passes, 2 when a check fails, and 1 on a
// usage or configuration error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "erl/io.hpp"
#include "erl/scenarios.hpp"

namespace {

struct Options {
    std::string scenario;
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = ".";
    bool json_output = false;
};

// Line/column of a byte offset in a buffer, both 1-based.
std::pair<std::size_t, std::size_t> locate_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min(byte, text.size());
    for (std::size_t i = 0; i + 1 <= stop; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

int load_config(const Options& opt, nlohmann::json& cfg) {
    cfg = nlohmann::json(nullptr);
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot open config file '" << opt.config_path << "'\n";
            return 1;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        try {
            cfg = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            const auto [line, column] = locate_byte(text, e.byte > 0 ? e.byte - 1 : 0);
            std::cerr << "config parse error at line " << line << ", column " << column
                      << ": " << e.what() << "\n";
            return 1;
        }
        if (!cfg.is_object()) {
            std::cerr << "error: config root must be a JSON object\n";
            return 1;
        }
    }
    if (opt.seed_given) {
        if (cfg.is_null()) cfg = nlohmann::json::object();
        cfg["seed"] = opt.seed;
    }
    return 0;
}

int run_one(const Options& opt) {
    nlohmann::json cfg;
    if (int rc = load_config(opt, cfg); rc != 0) return rc;

    erl::ScenarioResult result;
    try {
        result = erl::run_scenario(opt.scenario, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        const std::filesystem::path out(opt.out_dir);
        std::filesystem::create_directories(out);
        erl::io::atomic_write(out / "results.csv", result.csv);
        erl::io::atomic_write(out / "summary.json", result.summary.dump(2) + "\n");
        erl::io::atomic_write(out / "manifest.json", result.manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write outputs: " << e.what() << "\n";
        return 1;
    }

    if (opt.json_output) {
        std::cout << result.summary.dump(2) << "\n";
    } else {
        for (const auto& check : result.checks) {
            std::cout << (check.pass ? "PASS" : "FAIL") << "  " << check.name
                      << "  value=" << erl::io::format_double(check.value)
                      << " target=" << erl::io::format_double(check.target)
                      << " tol=" << erl::io::format_double(check.tolerance) << "  ("
                      << check.detail << ")\n";
        }
        std::size_t passed = 0;
        for (const auto& check : result.checks)
            if (check.pass) ++passed;
        std::cout << "scenario " << result.scenario << ": " << passed << "/"
                  << result.checks.size() << " checks passed; outputs in " << opt.out_dir
                  << "\n";
    }
    return result.all_pass() ? 0 : 2;
}

int run_list(bool json_output) {
    if (json_output) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& info : erl::scenario_catalog())
            arr.push_back({{"name", info.name}, {"description", info.description}});
        std::cout << arr.dump(2) << "\n";
    } else {
        for (const auto& info : erl::scenario_catalog())
            std::cout << info.name << "  " << info.description << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"escape rates and return clustering for open symbolic systems"};
    app.require_subcommand(1);

    Options opt;
    bool list_json = false;
    CLI::App* list_cmd = app.add_subcommand("list", "list available scenarios");
    list_cmd->add_flag("--json", list_json, "print the catalog as JSON");

    std::vector<CLI::App*> scenario_cmds;
    for (const auto& info : erl::scenario_catalog()) {
        CLI::App* cmd = app.add_subcommand(info.name, info.description);
        cmd->add_option("--config", opt.config_path, "JSON config file");
        cmd->add_option("--seed", opt.seed, "seed override");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_flag("--json", opt.json_output, "print the summary as JSON");
        scenario_cmds.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (list_cmd->parsed()) return run_list(list_json);
    for (std::size_t i = 0; i < scenario_cmds.size(); ++i) {
        if (scenario_cmds[i]->parsed()) {
            opt.scenario = erl::scenario_catalog()[i].name;
            opt.seed_given = scenario_cmds[i]->count("--seed") > 0;
            return run_one(opt);
        }
    }
    std::cerr << "error: no scenario selected\n";
    return 1;
}
