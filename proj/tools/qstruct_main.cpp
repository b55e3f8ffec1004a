#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "qstruct/config.hpp"
#include "qstruct/parallel.hpp"
#include "qstruct/scenario.hpp"

namespace {

struct CliArgs {
    std::string config;
    std::string output;
    long seed = -1;
    int save_every = -1;
    std::string mode = "auto";
};

int run_one(qstruct::Scenario scenario, const CliArgs& args) {
    using namespace qstruct;
    ScenarioConfig cfg = load_config_file(args.config, scenario);
    if (!args.output.empty()) cfg.output_dir = args.output;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.save_every > 0) cfg.save_every = args.save_every;

    ExecMode mode = default_exec_mode();
    if (args.mode == "serial") mode = ExecMode::Serial;
    if (args.mode == "openmp") mode = ExecMode::OpenMP;

    const ScenarioOutcome outcome = run_scenario(cfg, mode);
    for (const auto& w : outcome.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const auto& c : outcome.checks)
        std::printf("[%s] %s = %.6g (%s %.6g)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.cmp.c_str(), c.threshold);
    std::printf("summary: %s\n", outcome.summary_path.c_str());
    if (outcome.exit_code != 0) {
        std::fprintf(stderr, "%s: invariant violations:\n", scenario_name(scenario).c_str());
        for (const auto& v : outcome.violations()) std::fprintf(stderr, "  %s\n", v.c_str());
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    const int threads = qstruct::apply_thread_cap_from_env();

    CLI::App app{"qstruct: Stern-Gerlach structure simulator (quantum, Bohmian and classical layers)"};
    app.require_subcommand(1);

    struct Sub {
        qstruct::Scenario scenario;
        CLI::App* cmd;
        CliArgs args;
    };
    Sub subs[] = {
        {qstruct::Scenario::SgRun,
         app.add_subcommand("sg-run", "split-operator Stern-Gerlach run with branch analysis"),
         {}},
        {qstruct::Scenario::ErDemo,
         app.add_subcommand("er-demo", "entanglement relativity of a Gaussian product state"),
         {}},
        {qstruct::Scenario::BohmRun,
         app.add_subcommand("bohm-run", "Bohmian trajectory ensemble over a Stern-Gerlach run"),
         {}},
        {qstruct::Scenario::ClassicalSweep,
         app.add_subcommand("classical-sweep", "classical correlation relativity parameter sweep"),
         {}},
    };
    for (auto& s : subs) {
        s.cmd->add_option("--config", s.args.config, "scenario configuration file")->required();
        s.cmd->add_option("--output", s.args.output, "output directory (overrides config)");
        s.cmd->add_option("--seed", s.args.seed, "RNG seed (overrides config)");
        s.cmd->add_option("--save-every", s.args.save_every, "record cadence in steps");
        s.cmd->add_option("--mode", s.args.mode, "execution mode: auto | serial | openmp")
            ->check(CLI::IsMember({"auto", "serial", "openmp"}));
    }

    CLI11_PARSE(app, argc, argv);
    (void)threads;

    try {
        for (auto& s : subs)
            if (s.cmd->parsed()) return run_one(s.scenario, s.args);
    } catch (const qstruct::IOError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 1;
    } catch (const qstruct::ParseError& e) {
        std::fprintf(stderr, "config parse error: %s\n", e.what());
        return 1;
    } catch (const qstruct::ValidationError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const qstruct::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
