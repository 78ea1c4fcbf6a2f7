#include "teachsize/pipeline.hpp"

#include "support/temp_dir.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace teachsize;
namespace fs = std::filesystem;

namespace {

// The same experiment the shipped demo config describes, with absolute paths.
ExperimentConfig golden_config(const testutil::TempDir& tmp) {
    ExperimentConfig cfg;
    cfg.dataset_path = std::string(TEACHSIZE_DATA) + "/demo_dataset.ndjson";
    cfg.hyponyms_path = std::string(TEACHSIZE_DATA) + "/hyponyms.csv";
    cfg.priors_path = std::string(TEACHSIZE_DATA) + "/priors.csv";
    cfg.concepts = {"cat", "cup", "envelope", "house", "sun"};
    cfg.output_dir = tmp.sub("out");
    cfg.sample.target_size = 20;
    cfg.sample.seed = 42;

    LearnerConfig det;
    det.name = "oracle-k4";
    det.kind = LearnerKind::oracle_deterministic;
    det.threshold = 4;
    LearnerConfig sto;
    sto.name = "oracle-p70";
    sto.kind = LearnerKind::oracle_stochastic;
    sto.threshold = 3;
    sto.success_probability = 0.7;
    cfg.learners = {det, sto};
    return cfg;
}

const char* kGoldenFiles[] = {"accuracy.csv", "fom.csv", "teaching_size_bitmap.csv",
                              "teaching_size_coordinates.csv", "correlation_summary.csv"};

} // namespace

// Frozen outputs of a fixed oracle run over the committed demo dataset. Set
// TEACHSIZE_BLESS_GOLDEN=1 to regenerate the files under fixtures/golden
// after an intentional behavior change.
TEST_CASE("fixed demo run matches the committed golden reports") {
    testutil::TempDir tmp;
    const auto cfg = golden_config(tmp);
    run_selection_phase(cfg);
    run_teaching_size_phase(cfg);

    const std::string golden_dir = std::string(TEACHSIZE_FIXTURES) + "/golden";
    if (std::getenv("TEACHSIZE_BLESS_GOLDEN") != nullptr) {
        fs::create_directories(golden_dir);
        for (const auto* name : kGoldenFiles) {
            fs::copy_file(cfg.output_dir + "/" + name, golden_dir + "/" + name,
                          fs::copy_options::overwrite_existing);
        }
        MESSAGE("golden files regenerated");
        return;
    }

    for (const auto* name : kGoldenFiles) {
        INFO("file ", name);
        const auto got = testutil::read_file(cfg.output_dir + "/" + name);
        const auto want = testutil::read_file(golden_dir + "/" + name);
        REQUIRE(!want.empty());
        CHECK(got == want);
    }
}
