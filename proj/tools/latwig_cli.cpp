#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <latwig/errors.hpp>
#include <latwig/scenario.hpp>

namespace
{

// exit codes
constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_invariant = 3;

struct Options {
    std::string config;
    std::string out;
    bool quiet = false;
};

void print_diagnostics(const std::vector<latwig::Diagnostic> &diags)
{
    for (const auto &d : diags) {
        std::cerr << d.severity_name() << ": " << d.field << ": " << d.message << '\n';
    }
}

int run_command(const Options &opt, latwig::RunMode mode)
{
    try {
        const latwig::ScenarioConfig cfg = latwig::load_scenario(opt.config);
        const std::filesystem::path out = opt.out.empty() ? std::filesystem::path(cfg.outputs.directory) : std::filesystem::path(opt.out);
        const latwig::RunManifest man = latwig::run(cfg, mode, out);
        if (!opt.quiet) {
            print_diagnostics(man.diagnostics);
            std::cout << "wrote " << man.files.size() << " files to " << out.string() << '\n';
            std::cout << "boundary leak " << man.json["diagnostics"]["boundary_leak"].get<double>() << '\n';
            if (man.json["diagnostics"].contains("max_two_path_deviation")) {
                std::cout << "max two-path deviation "
                          << man.json["diagnostics"]["max_two_path_deviation"].get<double>() << '\n';
            }
        }
        if (man.invariant_violated) {
            std::cerr << "invariant violated: " << man.violation << '\n';
            return exit_invariant;
        }
        return exit_ok;
    } catch (const latwig::config_error &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const latwig::boundary_leak_error &e) {
        std::cerr << "invariant violated: " << e.what() << " (leak " << e.leak() << ")\n";
        return exit_invariant;
    } catch (const latwig::invariant_violation &e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return exit_invariant;
    }
}

int validate_command(const Options &opt)
{
    try {
        const latwig::ScenarioConfig cfg = latwig::load_scenario(opt.config);
        const auto diags = latwig::validate(cfg);
        print_diagnostics(diags);
        if (latwig::has_errors(diags)) {
            return exit_config;
        }
        if (!opt.quiet) {
            std::cout << "ok\n";
        }
        return exit_ok;
    } catch (const latwig::config_error &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Matrix-valued Wigner functions for a spin-1/2 particle on a 1D lattice"};
    app.require_subcommand(1);

    Options opt;
    auto add = [&](const char *name, const char *help, bool with_out) {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", opt.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
        if (with_out) {
            sub->add_option("-o,--out", opt.out, "output directory (overrides outputs.directory)");
        }
        sub->add_flag("-q,--quiet", opt.quiet, "suppress the summary");
        return sub;
    };
    auto *state = add("state", "compute the Wigner matrix of the initial state", true);
    auto *evolve = add("evolve", "continuous-time evolution", true);
    auto *walk = add("walk", "discrete-time quantum walk", true);
    auto *neg = add("negativity", "negativity of every snapshot", true);
    auto *val = add("validate", "static checks of a scenario file", false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    if (*val) {
        return validate_command(opt);
    }
    if (*state) {
        return run_command(opt, latwig::RunMode::state);
    }
    if (*evolve) {
        return run_command(opt, latwig::RunMode::evolve);
    }
    if (*walk) {
        return run_command(opt, latwig::RunMode::walk);
    }
    if (*neg) {
        return run_command(opt, latwig::RunMode::negativity);
    }
    return exit_config;
}
