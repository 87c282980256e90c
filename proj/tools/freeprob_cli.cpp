#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "freeprob/scenarios.hpp"

namespace {

using freeprob::cli::json;

int count_criteria(const json& report, bool passed_only) {
    if (!report.contains("criteria")) return 0;
    int n = 0;
    for (const auto& row : report["criteria"])
        if (!passed_only || row.value("pass", false)) ++n;
    return n;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scenario runner for the free probability toolkit"};
    std::string config_path;
    std::string out_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<double> tol_flag;
    int threads = 1;
    app.add_option("--config", config_path, "scenario config file (JSON)")->required();
    app.add_option("--seed", seed_flag, "RNG seed; overrides the config seed");
    app.add_option("--out", out_flag, "output directory (default: config \"out\", else .)");
    app.add_option("--threads", threads,
                   "accepted for interface parity; execution is single-threaded")
        ->check(CLI::PositiveNumber);
    app.add_option("--tolerance-scale", tol_flag, "scales the floating-point tolerances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // help exits clean, bad flags are config errors
    }

    json config;
    {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot open config file: " << config_path << "\n";
            return 2;
        }
        try {
            in >> config;
        } catch (const json::parse_error& e) {
            std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
            return 2;
        }
    }

    std::string scenario_name;
    std::string cfg_out;
    if (config.is_object()) {
        if (config.contains("scenario") && config["scenario"].is_string())
            scenario_name = config["scenario"].get<std::string>();
        if (config.contains("out") && config["out"].is_string())
            cfg_out = config["out"].get<std::string>();
    }

    freeprob::cli::RunOptions opts;
    opts.seed_flag = seed_flag;
    opts.tolerance_scale = tol_flag;
    if (const char* env = std::getenv("FREEPROB_SEED")) opts.seed_env = std::string(env);

    const auto t0 = std::chrono::steady_clock::now();
    freeprob::cli::ScenarioResult result;
    int code = 0;
    try {
        result = freeprob::cli::run_scenario(config, opts);
        code = result.pass ? 0 : 1;
    } catch (const freeprob::cli::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        result.report = json::object();
        result.report["scenario"] = scenario_name;
        result.report["error"] = e.what();
        result.report["pass"] = false;
        result.artifacts.clear();
        result.pass = false;
        code = 3;
    }

    std::filesystem::path out_dir = ".";
    if (!out_flag.empty())
        out_dir = out_flag;
    else if (!cfg_out.empty())
        out_dir = cfg_out;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << out_dir.string() << ": "
                  << ec.message() << "\n";
        return 3;
    }

    const std::filesystem::path report_path = out_dir / "report.json";
    try {
        for (const auto& [name, bytes] : result.artifacts)
            freeprob::io::write_text_file((out_dir / name).string(), bytes);
        // wall time goes to stderr only so the report stays byte-stable
        freeprob::io::write_text_file(report_path.string(), result.report.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", dt);
    std::cerr << "wall time: " << buf << " s\n";

    if (code == 3) {
        std::cout << (scenario_name.empty() ? "scenario" : scenario_name)
                  << ": error, partial report in " << report_path.string() << "\n";
    } else {
        std::cout << scenario_name << (result.pass ? ": pass (" : ": FAIL (")
                  << count_criteria(result.report, true) << "/"
                  << count_criteria(result.report, false) << " criteria), report "
                  << report_path.string() << "\n";
    }
    return code;
}
