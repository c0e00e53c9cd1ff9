// Command-line front end. Talks to the library exclusively through the
// public C API so it doubles as a smoke test of that boundary.

#include "phenoflow.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

struct CommandSpec {
    const char* name;
    const char* help;
    bool takes_target;
};

constexpr CommandSpec kCommands[] = {
    {"synth", "Generate a synthetic NDVI/soil/weather dataset", false},
    {"fit", "Fit double logistic season curves per plot-year", false},
    {"analyze", "Extract phenology, apply QC and regress against soil temperature", false},
    {"train", "Tune and train an MLP for one phenology target", true},
    {"explain", "Attribute model predictions with Kernel SHAP", true},
    {"all", "Run the whole pipeline: synth, fit, analyze, train, explain", false},
};

int fail_with(pf_pipeline* pipeline, pf_status status) {
    std::fprintf(stderr, "phenoflow: %s\n", pf_pipeline_last_error(pipeline));
    pf_pipeline_free(pipeline);
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phenoflow: NDVI season modelling, phenology extraction and attribution"};
    app.set_version_flag("--version", std::string(pf_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string target;
    std::uint64_t seed = 0;

    std::vector<CLI::App*> subcommands;
    for (const CommandSpec& spec : kCommands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--out-dir", out_dir, "Artifact directory (overrides the config)");
        if (spec.takes_target) {
            sub->add_option("--target", target, "Phenology target: sos, pos, peak or all");
        }
        subcommands.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e); // --help / --version
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(PF_ERROR_USAGE);
    }

    CLI::App* active = nullptr;
    for (CLI::App* sub : subcommands) {
        if (sub->parsed()) active = sub;
    }

    pf_pipeline* pipeline = pf_pipeline_new();
    if (!pipeline) {
        std::fprintf(stderr, "phenoflow: out of memory\n");
        return static_cast<int>(PF_ERROR_INTERNAL);
    }

    if (active->count("--config") > 0) {
        if (pf_status s = pf_pipeline_load_config(pipeline, config_path.c_str()); s != PF_OK) {
            return fail_with(pipeline, s);
        }
    }
    if (active->count("--seed") > 0) {
        if (pf_status s = pf_pipeline_set_seed(pipeline, seed); s != PF_OK) {
            return fail_with(pipeline, s);
        }
    }
    if (active->count("--out-dir") > 0) {
        if (pf_status s = pf_pipeline_set_out_dir(pipeline, out_dir.c_str()); s != PF_OK) {
            return fail_with(pipeline, s);
        }
    }

    pf_status status = pf_pipeline_run(pipeline, active->get_name().c_str(),
                                       target.empty() ? nullptr : target.c_str());
    if (status != PF_OK) return fail_with(pipeline, status);

    pf_pipeline_free(pipeline);
    return 0;
}
