// dynplan: run scenarios, plot trajectories, validate and list scenario files.
//
// Exit codes: 0 success, 1 assertion failure, 2 configuration error, 3 numeric abort.

#include <dynplan/plot.hpp>
#include <dynplan/runner.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using namespace dynplan;

namespace {

constexpr int kOk = 0, kAssertFail = 1, kConfig = 2, kNumeric = 3;

fs::path scenario_dir() {
    if (const char* e = std::getenv("DYNPLAN_SCENARIOS")) return e;
    return DYNPLAN_SCENARIO_DIR;
}

fs::path default_out() {
    if (const char* e = std::getenv("DYNPLAN_OUT")) return e;
    return "runs";
}

std::vector<fs::path> bundled() {
    std::vector<fs::path> out;
    if (!fs::is_directory(scenario_dir())) return out;
    for (const auto& e : fs::directory_iterator(scenario_dir()))
        if (e.path().extension() == ".yaml") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// A path, or the name of a bundled scenario.
fs::path resolve(const std::string& s) {
    if (fs::exists(s)) return s;
    fs::path p = scenario_dir() / (s + ".yaml");
    if (fs::exists(p)) return p;
    throw ConfigError("no scenario file or bundled scenario named '" + s + "'");
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    fs::path out;
    bool plots = false;
    bool force = false;
    bool quiet = false;
};

void write_plots(const fs::path& dir, const Simulation& sim, const fs::path& csv) {
    Table t = read_table(csv.string(), kCsvSchema);
    for (const auto& p : sim.plots) {
        bool causes = p.name.rfind("causes", 0) == 0;
        write_file(dir / (p.name + ".svg"), table_plot_svg(t, p.title.empty() ? p.name : p.title, p.columns, causes));
    }
}

int run_one(const fs::path& path, const RunOptions& o, std::ostream& log) {
    try {
        Simulation sim = load_simulation(path.string(), o.seed);
        fs::path dir = o.out / sim.name;
        if (fs::exists(dir / "trajectory.csv") && !o.force)
            throw ConfigError(dir.string() + " already holds a run; pass --force to overwrite");
        fs::create_directories(dir);
        RunResult r = run_simulation(sim);
        write_file(dir / "trajectory.csv", trajectory_csv(r));
        for (std::size_t a = 0; a < sim.agents.size(); ++a) {
            std::string d = discrete_csv(sim, a);
            if (!d.empty()) write_file(dir / ("discrete_" + sim.agents[a]->name + ".csv"), d);
        }
        write_file(dir / "summary.yaml", summary_yaml(r));
        if (o.plots) write_plots(dir, sim, dir / "trajectory.csv");
        if (!o.quiet) {
            log << sim.name << " (seed " << sim.seed << ", " << r.rows.size() << " ticks, " << r.seconds << " s)\n";
            for (const auto& a : r.assertions) log << "  [" << (a.pass ? "pass" : "FAIL") << "] " << a.name << ": " << a.detail << "\n";
            log << "  output: " << dir.string() << "\n";
        }
        return r.passed() ? kOk : kAssertFail;
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const YAML::Exception& e) {
        log << "configuration error: " << path.string() << ": " << e.what() << "\n";
        return kConfig;
    } catch (const NumericAbort& e) {
        log << "numeric abort: " << e.what() << "\n";
        return kNumeric;
    } catch (const ContractViolation& e) {
        log << "configuration error: " << e.what() << "\n";
        return kConfig;
    }
}

int validate_one(const fs::path& p) {
    try {
        Simulation sim = load_simulation(p.string());
        std::cout << "ok: " << p.string() << " (" << sim.name << ")\n";
        return kOk;
    } catch (const ConfigError& e) {
        std::cout << "invalid: " << e.what() << "\n";
    } catch (const YAML::Exception& e) {
        std::cout << "invalid: " << p.string() << ": " << e.what() << "\n";
    } catch (const ContractViolation& e) {
        std::cout << "invalid: " << p.string() << ": " << e.what() << "\n";
    }
    return kConfig;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical hybrid active-inference simulations"};
    app.require_subcommand(1);

    RunOptions ro;
    std::string run_target;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool all = false;
    auto* run = app.add_subcommand("run", "run a scenario (file path or bundled name)");
    run->add_option("scenario", run_target, "scenario file or bundled name");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_dir, "output directory (default $DYNPLAN_OUT or ./runs)");
    run->add_flag("--plots", ro.plots, "write SVG plots next to the CSV");
    run->add_flag("--force", ro.force, "overwrite an existing run directory");
    run->add_flag("--all", all, "run every bundled scenario");
    run->add_flag("-q,--quiet", ro.quiet, "print nothing but errors");

    std::string csv, spec, plot_out;
    auto* plot = app.add_subcommand("plot", "plot columns of a trajectory CSV");
    plot->add_option("csv", csv, "trajectory CSV")->required();
    plot->add_option("--spec", spec, "all, free_energy, causes, or a comma-separated column list")->required();
    plot->add_option("--out", plot_out, "SVG path (default: next to the CSV)");

    std::vector<std::string> vpaths;
    auto* validate = app.add_subcommand("validate", "check scenario files without running them");
    validate->add_option("paths", vpaths, "files or directories")->required();

    auto* list = app.add_subcommand("list", "list bundled scenarios");

    CLI11_PARSE(app, argc, argv);

    if (*run) {
        if (run->count("--seed")) ro.seed = seed;
        ro.out = out_dir.empty() ? default_out() : fs::path(out_dir);
        if (all) {
            auto files = bundled();
            std::vector<int> codes(files.size(), 0);
            std::vector<std::string> logs(files.size());
            std::vector<std::thread> pool;
            for (std::size_t i = 0; i < files.size(); ++i)
                pool.emplace_back([&, i] {
                    std::ostringstream os;
                    codes[i] = run_one(files[i], ro, os);
                    logs[i] = os.str();
                });
            for (auto& t : pool) t.join();
            int worst = kOk;
            for (std::size_t i = 0; i < files.size(); ++i) {
                std::cout << logs[i];
                worst = std::max(worst, codes[i]);
            }
            return worst;
        }
        if (run_target.empty()) {
            std::cerr << "run: give a scenario or --all\n";
            return kConfig;
        }
        try {
            return run_one(resolve(run_target), ro, std::cout);
        } catch (const ConfigError& e) {
            std::cerr << "configuration error: " << e.what() << "\n";
            return kConfig;
        }
    }

    if (*plot) {
        try {
            Table t = read_table(csv, kCsvSchema);
            std::vector<std::string> cols;
            bool causes = false;
            if (spec == "all") {
                for (const auto& c : t.columns)
                    if (c != "tick" && c != "t") cols.push_back(c);
            } else if (spec == "free_energy") {
                for (const auto& c : t.columns)
                    if (c == "F" || c.rfind("F_", 0) == 0) cols.push_back(c);
            } else if (spec == "causes") {
                causes = true;
                for (const auto& c : t.columns)
                    if (c.rfind("v_", 0) == 0) cols.push_back(c);
            } else {
                cols = split_csv_line(spec);
            }
            if (cols.empty()) throw ConfigError("spec '" + spec + "' selects no columns; available: " + t.listing());
            fs::path dest = plot_out.empty() ? fs::path(csv).replace_filename(spec.find(',') == std::string::npos ? spec + ".svg" : "plot.svg")
                                             : fs::path(plot_out);
            write_file(dest, table_plot_svg(t, fs::path(csv).parent_path().filename().string() + ": " + spec, cols, causes));
            std::cout << dest.string() << "\n";
            return kOk;
        } catch (const ConfigError& e) {
            std::cerr << "plot error: " << e.what() << "\n";
            return kConfig;
        }
    }

    if (*validate) {
        int worst = kOk;
        for (const auto& p : vpaths) {
            if (fs::is_directory(p)) {
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(p))
                    if (e.path().extension() == ".yaml") files.push_back(e.path());
                std::sort(files.begin(), files.end());
                for (const auto& f : files) worst = std::max(worst, validate_one(f));
            } else if (fs::exists(p)) {
                worst = std::max(worst, validate_one(p));
            } else {
                std::cout << "invalid: " << p << ": no such file\n";
                worst = kConfig;
            }
        }
        return worst;
    }

    if (*list) {
        for (const auto& f : bundled()) {
            try {
                Simulation sim = load_simulation(f.string());
                std::cout << sim.name << "  " << sim.description << "\n";
            } catch (const std::exception& e) {
                std::cout << f.stem().string() << "  (invalid: " << e.what() << ")\n";
            }
        }
        return kOk;
    }
    return kOk;
}
