#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ybcav/cli.hpp"
#include "ybcav/errors.hpp"

namespace {

const char* describe(const std::string& name) {
    if (name == "lifetime") return "pulsed decay histogram and lifetime fit";
    if (name == "pump-probe") return "pump scan over C with fixed probe on A";
    if (name == "rabi") return "readout-train counts vs pulse duration";
    if (name == "ramsey") return "fringe contrast vs free-evolution delay";
    if (name == "echo") return "refocused contrast vs total delay";
    if (name == "g2") return "pulsed photon-correlation histogram";
    if (name == "ple") return "ensemble excitation spectrum";
    if (name == "lifetimes") return "ensemble lifetime histogram";
    if (name == "purcell") return "enhancement chain for one site";
    if (name == "reflection") return "cavity reflection dip and Q refit";
    if (name == "bragg") return "mirror bandgap, transmission, Q estimate";
    if (name == "calibrate") return "fit noise model to coherence targets";
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation of a single 171Yb ion coupled to a GaAs "
                 "photonic-crystal cavity: decay, coherence, photon "
                 "statistics, ensemble spectra, and mirror models."};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t shots = 0;
    bool full_scale = false;
    for (const std::string& name : ybcav::subcommand_names()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--shots", shots, "shot-count override");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--full-scale", full_scale,
                      "experiment-scale statistics (5e5 shots)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ybcav::RunConfig config;
    try {
        config = config_path.empty()
                     ? ybcav::parse_config_text("{}")
                     : ybcav::parse_config_file(config_path);
    } catch (const ybcav::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto override_audit = [&](const std::string& field,
                              const std::string& value) {
        for (auto& entry : config.audit) {
            if (entry.field == field) {
                entry.value = value;
                entry.defaulted = false;
            }
        }
    };
    if (sub->count("--seed") > 0) {
        config.master_seed = seed;
        override_audit("master_seed", std::to_string(seed));
    }
    if (full_scale) {
        shots = 500000;
    }
    if (sub->count("--shots") > 0 || full_scale) {
        config.protocol.shots = shots;
        config.g2.shots = shots;
        override_audit("protocol.shots", std::to_string(shots));
        override_audit("g2.shots", std::to_string(shots));
    }
    if (sub->count("--out") > 0) {
        config.out_dir = out_dir;
        override_audit("out_dir", '"' + out_dir + '"');
    }

    return ybcav::run_cli(sub->get_name(), config, std::cout);
}
