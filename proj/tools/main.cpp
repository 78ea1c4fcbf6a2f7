#include "teachsize/drawing.hpp"
#include "teachsize/errors.hpp"
#include "teachsize/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace teachsize;

struct GlobalArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::vector<std::string> models;
    std::string modality = "both";
    bool fresh = false;
    bool dry_run = false;
};

RunOptions to_options(const GlobalArgs& args) {
    RunOptions opts;
    opts.fresh = args.fresh;
    opts.dry_run = args.dry_run;
    opts.seed_override = args.seed;
    opts.model_filter = args.models;
    if (args.modality != "both") opts.modality_filter = modality_from_name(args.modality);
    return opts;
}

void add_common_flags(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", args.seed, "override the sampling/trial seed");
    cmd->add_option("--models", args.models, "restrict to these learner names")->delimiter(',');
    cmd->add_option("--modality", args.modality, "bitmap, coordinates, or both")
        ->check(CLI::IsMember({"bitmap", "coordinates", "both"}));
    cmd->add_flag("--fresh", args.fresh, "discard the manifest and cache before running");
    cmd->add_flag("--dry-run", args.dry_run, "count prompts without calling any learner");
}

int cmd_ingest(const GlobalArgs& args) {
    const auto cfg = ExperimentConfig::load(args.config_path);
    cfg.validate();
    std::set<std::string> filter(cfg.concepts.begin(), cfg.concepts.end());
    CorpusStats stats;
    const auto corpora = load_corpus(cfg.dataset_path, filter, /*recognized_only=*/false, &stats);
    std::cout << "dataset: " << cfg.dataset_path << "\n"
              << "records: " << stats.lines_read << " (skipped " << stats.skipped_unknown_concept
              << " with unlisted concepts)\n";
    for (const auto& corpus : corpora) {
        int recognized = 0;
        for (const auto& d : corpus.drawings) recognized += d.recognized ? 1 : 0;
        std::cout << "  " << corpus.concept_name << ": " << corpus.drawings.size() << " drawings, "
                  << recognized << " recognized\n";
    }
    return 0;
}

int cmd_validate(const GlobalArgs& args) {
    const auto cfg = ExperimentConfig::load(args.config_path);
    cfg.validate();
    HyponymTable::load_csv(cfg.hyponyms_path, cfg.concepts);
    load_priors(cfg.priors_path).validate_covers(cfg.concepts);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    std::cout << "config ok (hash " << buf << ")\n";
    return 0;
}

int cmd_select(const GlobalArgs& args) {
    const auto cfg = ExperimentConfig::load(args.config_path);
    const auto opts = to_options(args);
    if (args.dry_run) {
        const auto counts = count_selection_prompts(cfg, opts);
        int total = 0, cached = 0;
        for (const auto& [key, c] : counts) {
            std::cout << key << ": " << c.total << " prompts (" << c.cached << " cached, "
                      << c.to_issue() << " to issue)\n";
            total += c.total;
            cached += c.cached;
        }
        std::cout << "total: " << total << " prompts, " << total - cached << " to issue\n";
        return 0;
    }
    const auto summary = run_selection_phase(cfg, opts);
    int prompts = 0;
    for (const auto& [key, n] : summary.total_prompts) prompts += n;
    std::cout << "selection phase complete: " << prompts << " prompts in cache, reports in "
              << cfg.output_dir << "\n";
    return 0;
}

int cmd_teach(const GlobalArgs& args) {
    const auto cfg = ExperimentConfig::load(args.config_path);
    const auto opts = to_options(args);
    if (args.dry_run) {
        run_teaching_size_phase(cfg, opts);
        std::cout << "dry run: no teaching-size trials issued\n";
        return 0;
    }
    const auto out = run_teaching_size_phase(cfg, opts);
    int identified = 0;
    for (const auto& row : out.summary.rows) identified += row.result.identified() ? 1 : 0;
    std::cout << "teaching-size phase complete: " << identified << "/" << out.summary.rows.size()
              << " (concept, model, modality) combinations identified; reports in "
              << cfg.output_dir << "\n";
    return 0;
}

int cmd_report(const GlobalArgs& args) {
    const auto cfg = ExperimentConfig::load(args.config_path);
    regenerate_reports(cfg, to_options(args));
    std::cout << "reports regenerated from cache into " << cfg.output_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"teachsize: how simply can a visual concept be taught, in bitmaps vs. "
                 "coordinate text"};
    app.require_subcommand(1);

    GlobalArgs args;
    auto* ingest = app.add_subcommand("ingest", "parse and summarize the drawing dataset");
    auto* validate = app.add_subcommand("validate-config", "check the experiment config");
    auto* select = app.add_subcommand("select", "run the drawing selection phase (T=0)");
    auto* teach = app.add_subcommand("teach", "run the teaching-size phase (T=1)");
    auto* report = app.add_subcommand("report", "regenerate all reports from the cache");
    for (auto* cmd : {ingest, validate, select, teach, report}) add_common_flags(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(args);
        if (validate->parsed()) return cmd_validate(args);
        if (select->parsed()) return cmd_select(args);
        if (teach->parsed()) return cmd_teach(args);
        if (report->parsed()) return cmd_report(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
