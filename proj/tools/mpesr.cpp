#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpesr/commands.hpp"
#include "mpesr/config.hpp"
#include "mpesr/errors.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> inputs;
    bool print_config = false;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "JSON run configuration");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "base seed for noise");
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 4096));
    cmd->add_flag("--print-config", o.print_config,
                  "print the effective configuration and exit");
}

int report_error(const char* kind, const std::string& message, int code)
{
    const nlohmann::json line = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << line.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-photon spin resonance: Floquet and Liouville simulation, spectrum analysis"};
    app.require_subcommand(1);
    Overrides o;
    CLI::App* simulate = app.add_subcommand("simulate", "synthesize spectra over B1 and theta");
    CLI::App* locate = app.add_subcommand("locate", "Floquet resonance table");
    CLI::App* analyze = app.add_subcommand("analyze", "peak, shift and ratio reports");
    CLI::App* angular = app.add_subcommand("angular", "angular law of the n-photon gap");
    for (CLI::App* c : {simulate, locate, analyze, angular}) {
        add_common(c, o);
    }
    analyze->add_option("inputs", o.inputs, "spectrum files or directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), mpesr::kExitValidation);
    }

    try {
        mpesr::RunConfig config;
        if (!o.config_path.empty()) {
            config = mpesr::load_config(o.config_path);
        }
        CLI::App* chosen = app.get_subcommands().front();
        config.command = chosen->get_name();
        if (o.out) {
            config.out_dir = *o.out;
        }
        if (o.seed) {
            config.seed = *o.seed;
        }
        if (o.threads) {
            config.threads = *o.threads;
        }
        if (!o.inputs.empty()) {
            config.analyze.inputs = o.inputs;
        }
        config.validate();
        if (o.print_config) {
            std::cout << mpesr::serialize_config(config);
            return mpesr::kExitOk;
        }

        mpesr::CommandResult result;
        if (chosen == simulate) {
            result = mpesr::cmd_simulate(config, std::cerr);
        } else if (chosen == locate) {
            result = mpesr::cmd_locate(config, std::cerr);
        } else if (chosen == analyze) {
            result = mpesr::cmd_analyze(config, std::cout, std::cerr);
        } else {
            result = mpesr::cmd_angular(config, std::cout, std::cerr);
        }
        if (result.exit_code == mpesr::kExitPartial) {
            return report_error("partial", "some inputs could not be analyzed",
                                mpesr::kExitPartial);
        }
        return result.exit_code;
    } catch (const mpesr::ValidationError& e) {
        return report_error("validation", e.what(), mpesr::kExitValidation);
    } catch (const mpesr::SolverError& e) {
        return report_error("solver", e.what(), mpesr::kExitSolver);
    } catch (const mpesr::IoError& e) {
        return report_error("io", e.what(), mpesr::kExitIo);
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error("io", e.what(), mpesr::kExitIo);
    }
}
