// Exercises the shared library strictly through its C surface.

#include <phenoflow.h>

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Handle {
    pf_pipeline* p;
    Handle() : p(pf_pipeline_new()) { REQUIRE(p != nullptr); }
    ~Handle() { pf_pipeline_free(p); }
};

struct CapiTempDir {
    fs::path path;
    CapiTempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("phenoflow_capi_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~CapiTempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string tiny_config_json(const std::string& out_dir) {
    return std::string("{") + "\"out_dir\": \"" + out_dir + "\"," +
           "\"seed\": 5," +
           "\"tuning_budget\": 1," +
           "\"cv_folds\": 2," +
           "\"shap_budget\": 160," +
           "\"background_cap\": 5," +
           "\"shap_max_instances\": 4," +
           "\"svg\": false," +
           "\"synthetic\": {\"transects\": 1, \"n_years\": 4}" + "}";
}

} // namespace

TEST_CASE("version is a stable semver string") {
    const char* v = pf_version();
    REQUIRE(v != nullptr);
    CHECK(std::strcmp(v, "1.0.0") == 0);
    CHECK(v == pf_version()); // static storage
}

TEST_CASE("null handles are rejected, not dereferenced") {
    CHECK(pf_pipeline_run(nullptr, "synth", nullptr) == PF_ERROR_USAGE);
    CHECK(pf_pipeline_set_seed(nullptr, 1) == PF_ERROR_USAGE);
    CHECK(pf_pipeline_set_out_dir(nullptr, "x") == PF_ERROR_USAGE);
    CHECK(pf_pipeline_set_config_json(nullptr, "{}") == PF_ERROR_USAGE);
    CHECK(pf_pipeline_load_config(nullptr, "nowhere.json") == PF_ERROR_USAGE);
    pf_pipeline_free(nullptr); // no-op
}

TEST_CASE("configuration errors surface as usage failures with messages") {
    Handle h;
    CHECK(pf_pipeline_set_config_json(h.p, "{\"no_such_key\": 1}") == PF_ERROR_USAGE);
    CHECK(std::strlen(pf_pipeline_last_error(h.p)) > 0);

    CHECK(pf_pipeline_set_config_json(h.p, "{ not json") == PF_ERROR_USAGE);
    CHECK(std::strlen(pf_pipeline_last_error(h.p)) > 0);

    CHECK(pf_pipeline_load_config(h.p, "/no/such/config.json") == PF_ERROR_USAGE);
    CHECK(std::strlen(pf_pipeline_last_error(h.p)) > 0);

    // success clears the message
    CHECK(pf_pipeline_set_config_json(h.p, "{}") == PF_OK);
    CHECK(std::strcmp(pf_pipeline_last_error(h.p), "") == 0);
}

TEST_CASE("unknown commands and targets are usage errors") {
    Handle h;
    CHECK(pf_pipeline_run(h.p, "transmogrify", nullptr) == PF_ERROR_USAGE);
    CHECK(pf_pipeline_run(h.p, "train", "median") == PF_ERROR_USAGE);
}

TEST_CASE("missing inputs map to the ingest status") {
    CapiTempDir dir;
    Handle h;
    CHECK(pf_pipeline_set_out_dir(h.p, dir.file("out").c_str()) == PF_OK);
    CHECK(pf_pipeline_run(h.p, "fit", nullptr) == PF_ERROR_INGEST);
    CHECK(std::strlen(pf_pipeline_last_error(h.p)) > 0);
    CHECK(pf_pipeline_run(h.p, "analyze", nullptr) == PF_ERROR_INGEST);
}

TEST_CASE("too little usable data maps to the insufficient-data status") {
    CapiTempDir dir;
    fs::create_directories(dir.file("out"));
    {
        std::ofstream fits(dir.file("out/fits.csv"));
        fits << "plot_id,year,a1,a2,b1,b2,c,d,p,r2,mse,n_points,converged,deriv_gap\n";
        for (char c : {'A', 'B', 'C'}) {
            fits << "DG-1-" << c << ",2015,0,0,0,0,0,0,0,0,0,4,0,0\n";
        }
        std::ofstream soil(dir.file("out/soil.csv"));
        soil << "plot_id,year,doy,temp_c\nDG-1-A,2015,1,5.0\n";
    }
    Handle h;
    CHECK(pf_pipeline_set_out_dir(h.p, dir.file("out").c_str()) == PF_OK);
    CHECK(pf_pipeline_run(h.p, "analyze", nullptr) == PF_ERROR_INSUFFICIENT_DATA);
}

TEST_CASE("the full pipeline runs through the C surface") {
    CapiTempDir dir;
    Handle h;
    REQUIRE(pf_pipeline_set_config_json(h.p, tiny_config_json(dir.file("out")).c_str()) ==
            PF_OK);

    CHECK(pf_pipeline_run(h.p, "all", nullptr) == PF_OK);
    CHECK(std::strcmp(pf_pipeline_last_error(h.p), "") == 0);

    for (const char* name :
         {"ndvi.csv", "soil.csv", "fits.csv", "phenology.csv", "linreg.csv", "report.json"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir.file(std::string("out/") + name)));
    }
    for (const char* target : {"sos", "pos", "peak"}) {
        CAPTURE(target);
        CHECK(fs::exists(dir.file(std::string("out/") + target + "/model.json")));
        CHECK(fs::exists(dir.file(std::string("out/") + target + "/eval.json")));
        CHECK(fs::exists(dir.file(std::string("out/") + target + "/shap.csv")));
        CHECK(fs::exists(dir.file(std::string("out/") + target + "/a_shap.csv")));
    }
}

TEST_CASE("seed and out-dir overrides drive deterministic synthesis") {
    CapiTempDir dir;
    auto generate = [&](const std::string& sub, uint64_t seed) {
        Handle h;
        REQUIRE(pf_pipeline_set_config_json(
                    h.p, "{\"synthetic\": {\"transects\": 1, \"n_years\": 1}}") == PF_OK);
        REQUIRE(pf_pipeline_set_seed(h.p, seed) == PF_OK);
        REQUIRE(pf_pipeline_set_out_dir(h.p, dir.file(sub).c_str()) == PF_OK);
        REQUIRE(pf_pipeline_run(h.p, "synth", nullptr) == PF_OK);
        std::ifstream in(dir.file(sub + "/ndvi.csv"), std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };
    std::string a = generate("a", 11);
    std::string b = generate("b", 11);
    std::string c = generate("c", 12);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.find("plot_id,year,week,ndvi") == 0);
}

TEST_CASE("a config file is honoured by later runs") {
    CapiTempDir dir;
    {
        std::ofstream config(dir.file("config.json"));
        config << "{\"out_dir\": \"" << dir.file("from_file")
               << "\", \"svg\": false, \"synthetic\": {\"transects\": 1, \"n_years\": 1}}";
    }
    Handle h;
    CHECK(pf_pipeline_load_config(h.p, dir.file("config.json").c_str()) == PF_OK);
    CHECK(pf_pipeline_run(h.p, "synth", nullptr) == PF_OK);
    CHECK(fs::exists(dir.file("from_file/ndvi.csv")));
}
