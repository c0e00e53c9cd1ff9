#include "phenoflow.h"

#include "errors.hpp"
#include "pipeline.hpp"

#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

struct pf_pipeline {
    phenoflow::Pipeline pipeline;
    std::string last_error;
};

namespace {

pf_status status_from(phenoflow::Errc code) {
    using phenoflow::Errc;
    switch (code) {
    case Errc::invalid_config:
        return PF_ERROR_USAGE;
    case Errc::io_error:
    case Errc::malformed_row:
    case Errc::out_of_range:
    case Errc::duplicate_sample:
    case Errc::empty_window:
    case Errc::missing_week:
    case Errc::missing_soil:
        return PF_ERROR_INGEST;
    case Errc::too_few_points:
    case Errc::no_convergence:
    case Errc::degenerate_fit:
    case Errc::constant_predictor:
    case Errc::constant_series:
    case Errc::too_few_samples_in_year:
        return PF_ERROR_INSUFFICIENT_DATA;
    case Errc::non_finite_loss:
        return PF_ERROR_TRAINING;
    case Errc::degenerate_system:
    case Errc::additivity_violation:
        return PF_ERROR_EXPLAIN;
    default: // length_mismatch, zero_slope, invalid_coalition_size, ...
        return PF_ERROR_INTERNAL;
    }
}

template <typename Fn>
pf_status guarded(pf_pipeline* pipeline, Fn&& fn) {
    if (!pipeline) return PF_ERROR_USAGE;
    pipeline->last_error.clear();
    try {
        fn();
        return PF_OK;
    } catch (const phenoflow::Error& e) {
        pipeline->last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        pipeline->last_error = e.what();
        return PF_ERROR_INTERNAL;
    } catch (...) {
        pipeline->last_error = "unknown error";
        return PF_ERROR_INTERNAL;
    }
}

} // namespace

extern "C" {

const char* pf_version(void) { return "1.0.0"; }

pf_pipeline* pf_pipeline_new(void) { return new (std::nothrow) pf_pipeline{}; }

void pf_pipeline_free(pf_pipeline* pipeline) { delete pipeline; }

pf_status pf_pipeline_load_config(pf_pipeline* pipeline, const char* path) {
    return guarded(pipeline, [&] {
        if (!path) {
            phenoflow::fail(phenoflow::Errc::invalid_config, "config path is null");
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            phenoflow::fail(phenoflow::Errc::invalid_config,
                            std::string("cannot open config ") + path);
        }
        std::ostringstream text;
        text << in.rdbuf();
        pipeline->pipeline.config() = phenoflow::config_from_json(text.str());
    });
}

pf_status pf_pipeline_set_config_json(pf_pipeline* pipeline, const char* json_text) {
    return guarded(pipeline, [&] {
        if (!json_text) {
            phenoflow::fail(phenoflow::Errc::invalid_config, "config JSON is null");
        }
        pipeline->pipeline.config() = phenoflow::config_from_json(json_text);
    });
}

pf_status pf_pipeline_set_seed(pf_pipeline* pipeline, uint64_t seed) {
    return guarded(pipeline, [&] {
        pipeline->pipeline.config().seed = seed;
        pipeline->pipeline.config().synth.seed = seed;
    });
}

pf_status pf_pipeline_set_out_dir(pf_pipeline* pipeline, const char* out_dir) {
    return guarded(pipeline, [&] {
        if (!out_dir || !*out_dir) {
            phenoflow::fail(phenoflow::Errc::invalid_config, "out_dir is null or empty");
        }
        pipeline->pipeline.config().out_dir = out_dir;
    });
}

pf_status pf_pipeline_run(pf_pipeline* pipeline, const char* command, const char* target) {
    return guarded(pipeline, [&] {
        if (!command) {
            phenoflow::fail(phenoflow::Errc::invalid_config, "command is null");
        }
        pipeline->pipeline.run(command, target ? target : "");
    });
}

const char* pf_pipeline_last_error(const pf_pipeline* pipeline) {
    return pipeline ? pipeline->last_error.c_str() : "";
}

} // extern "C"
