#include "teachsize/pipeline.hpp"

#include "teachsize/errors.hpp"
#include "teachsize/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace teachsize {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

uint64_t eps_key(double eps) { return static_cast<uint64_t>(std::llround(eps * 1024.0)); }

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string sanitize_filename(std::string s) {
    for (auto& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '-';
    }
    return lowercase(std::move(s));
}

ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["dataset"] = cfg.dataset_path;
    j["concepts"] = cfg.concepts;
    j["hyponyms"] = cfg.hyponyms_path;
    j["priors"] = cfg.priors_path;
    j["output_dir"] = cfg.output_dir;
    j["eps_step"] = cfg.eps_step;
    j["sample"] = {{"target_size", cfg.sample.target_size}, {"seed", cfg.sample.seed}};
    j["protocol"] = {{"rho", cfg.protocol.rho},
                     {"n_trials", cfg.protocol.n_trials},
                     {"selection_temperature", cfg.protocol.selection_temperature},
                     {"teaching_temperature", cfg.protocol.teaching_temperature}};
    j["concurrency"] = cfg.concurrency;
    ordered_json mods = ordered_json::array();
    for (auto m : cfg.modalities) mods.push_back(modality_name(m));
    j["modalities"] = mods;
    ordered_json learners = ordered_json::array();
    for (const auto& l : cfg.learners) {
        ordered_json lj;
        lj["name"] = l.name;
        lj["kind"] = learner_kind_name(l.kind);
        lj["model_name"] = l.model_name;
        lj["temperature"] = l.temperature;
        lj["endpoint"] = l.endpoint;
        lj["path"] = l.path;
        lj["api_key_env"] = l.api_key_env;
        lj["auth_header"] = l.auth_header;
        lj["auth_prefix"] = l.auth_prefix;
        lj["max_retries"] = l.max_retries;
        lj["request_timeout_sec"] = l.request_timeout_sec;
        lj["backoff_base_ms"] = l.backoff_base_ms;
        lj["rate_limit_per_sec"] = l.rate_limit_per_sec;
        lj["threshold"] = l.threshold;
        lj["success_probability"] = l.success_probability;
        learners.push_back(std::move(lj));
    }
    j["learners"] = std::move(learners);
    return j;
}

} // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.dataset_path = j.at("dataset").get<std::string>();
        for (const auto& c : j.at("concepts")) cfg.concepts.push_back(lowercase(c.get<std::string>()));
        cfg.hyponyms_path = j.at("hyponyms").get<std::string>();
        cfg.priors_path = j.at("priors").get<std::string>();
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.eps_step = j.value("eps_step", cfg.eps_step);
        if (j.contains("sample")) {
            cfg.sample.target_size = j["sample"].value("target_size", cfg.sample.target_size);
            cfg.sample.seed = j["sample"].value("seed", cfg.sample.seed);
        }
        if (j.contains("protocol")) {
            const auto& p = j["protocol"];
            cfg.protocol.rho = p.value("rho", cfg.protocol.rho);
            cfg.protocol.n_trials = p.value("n_trials", cfg.protocol.n_trials);
            cfg.protocol.selection_temperature =
                p.value("selection_temperature", cfg.protocol.selection_temperature);
            cfg.protocol.teaching_temperature =
                p.value("teaching_temperature", cfg.protocol.teaching_temperature);
        }
        cfg.concurrency = j.value("concurrency", cfg.concurrency);
        if (j.contains("modalities")) {
            cfg.modalities.clear();
            for (const auto& m : j["modalities"]) {
                cfg.modalities.push_back(modality_from_name(m.get<std::string>()));
            }
        }
        for (const auto& lj : j.at("learners")) {
            LearnerConfig l;
            l.name = lj.at("name").get<std::string>();
            l.kind = learner_kind_from_name(lj.at("kind").get<std::string>());
            l.model_name = lj.value("model_name", l.name);
            l.temperature = lj.value("temperature", l.temperature);
            l.endpoint = lj.value("endpoint", l.endpoint);
            l.path = lj.value("path", l.path);
            l.api_key_env = lj.value("api_key_env", l.api_key_env);
            l.auth_header = lj.value("auth_header", l.auth_header);
            l.auth_prefix = lj.value("auth_prefix", l.auth_prefix);
            l.max_retries = lj.value("max_retries", l.max_retries);
            l.request_timeout_sec = lj.value("request_timeout_sec", l.request_timeout_sec);
            l.backoff_base_ms = lj.value("backoff_base_ms", l.backoff_base_ms);
            l.rate_limit_per_sec = lj.value("rate_limit_per_sec", l.rate_limit_per_sec);
            l.threshold = lj.value("threshold", l.threshold);
            l.success_probability = lj.value("success_probability", l.success_probability);
            cfg.learners.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (!fs::exists(dataset_path)) throw ConfigError("dataset file not found: " + dataset_path);
    if (!fs::exists(hyponyms_path))
        throw ConfigError("hyponym table not found: " + hyponyms_path);
    if (!fs::exists(priors_path)) throw ConfigError("priors file not found: " + priors_path);
    if (concepts.empty()) throw ConfigError("config: concept set is empty");
    if (learners.empty()) throw ConfigError("config: no learners configured");
    if (modalities.empty()) throw ConfigError("config: no modalities configured");
    if (eps_step <= 0.0) throw ConfigError("config: eps_step must be > 0");
    if (sample.target_size < 1) throw ConfigError("config: sample target_size must be >= 1");
    if (concurrency < 1) throw ConfigError("config: concurrency must be >= 1");

    Protocol p{protocol.rho, protocol.n_trials, protocol.teaching_temperature};
    p.validate();
    if (protocol.selection_temperature < 0.0 || protocol.selection_temperature > 2.0)
        throw ConfigError("config: selection_temperature must be in [0,2]");
    // Temperature is part of the cache key; equal phase temperatures would let
    // the two phases consume each other's records.
    if (protocol.selection_temperature == protocol.teaching_temperature)
        throw ConfigError("config: selection and teaching temperatures must differ");

    std::set<std::string> names;
    for (const auto& l : learners) {
        l.validate();
        if (!names.insert(l.name).second)
            throw ConfigError("config: duplicate learner name '" + l.name + "'");
    }
}

uint64_t ExperimentConfig::config_hash() const {
    return fnv1a64(config_to_json(*this).dump());
}

// --- preparation -----------------------------------------------------------------

std::vector<PreparedConcept> prepare_concepts(const ExperimentConfig& cfg, uint64_t seed) {
    std::set<std::string> filter(cfg.concepts.begin(), cfg.concepts.end());
    const auto corpora = load_corpus(cfg.dataset_path, filter, /*recognized_only=*/true);

    std::vector<PreparedConcept> out;
    for (const auto& corpus : corpora) {
        PreparedConcept pc;
        pc.concept_name = corpus.concept_name;
        SampleConfig sample = cfg.sample;
        sample.seed = derive_seed(seed, "sample", corpus.concept_name);
        const auto drawings = stratified_sample(corpus, sample);
        for (const auto& d : drawings) {
            const auto ladder = build_ladder(d, 2.0, cfg.eps_step);
            std::set<uint64_t> seen; // one prompt per distinct simplified geometry
            for (const auto& rung : ladder.rungs) {
                if (!seen.insert(geometry_hash(rung.drawing)).second) continue;
                pc.rungs.emplace_back(rung.epsilon, rung.drawing);
            }
        }
        out.push_back(std::move(pc));
    }
    return out;
}

// --- manifest ---------------------------------------------------------------------

namespace {

struct Manifest {
    std::string config_hash;
    bool selection_completed = false;
    bool teaching_completed = false;
    std::map<std::string, int> selection_prompts;
    std::map<std::string, int> teaching_prompts;
};

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<Manifest> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j = json::parse(in);
    Manifest m;
    m.config_hash = j.value("config_hash", "");
    if (j.contains("selection")) {
        m.selection_completed = j["selection"].value("completed", false);
        const json prompts = j["selection"].value("prompts", json::object());
        for (const auto& [k, v] : prompts.items()) m.selection_prompts[k] = v.get<int>();
    }
    if (j.contains("teaching")) {
        m.teaching_completed = j["teaching"].value("completed", false);
        const json prompts = j["teaching"].value("prompts", json::object());
        for (const auto& [k, v] : prompts.items()) m.teaching_prompts[k] = v.get<int>();
    }
    return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
    ordered_json j;
    j["config_hash"] = m.config_hash;
    j["selection"] = {{"completed", m.selection_completed},
                      {"prompts", ordered_json(m.selection_prompts)}};
    j["teaching"] = {{"completed", m.teaching_completed},
                     {"prompts", ordered_json(m.teaching_prompts)}};
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

// Loads (or resets) the manifest and enforces that cached state belongs to
// this configuration.
Manifest open_manifest(const ExperimentConfig& cfg, const RunOptions& opts) {
    fs::create_directories(cfg.output_dir);
    const std::string expected = hash_hex(cfg.config_hash());
    if (opts.fresh) {
        std::error_code ec;
        fs::remove(cfg.manifest_path(), ec);
        fs::remove(cfg.cache_path(), ec);
    }
    auto existing = load_manifest(cfg.manifest_path());
    if (existing) {
        if (existing->config_hash != expected) {
            throw ConfigError("output directory holds results for a different config "
                              "(hash " + existing->config_hash + ", expected " + expected +
                              "); rerun with --fresh to discard them");
        }
        return *existing;
    }
    Manifest m;
    m.config_hash = expected;
    return m;
}

struct LearnerSet {
    std::vector<std::string> names; // sorted
    std::map<std::string, std::unique_ptr<Learner>> by_name;
    std::map<std::string, LearnerKind> kinds;
};

LearnerSet build_learners(const ExperimentConfig& cfg, const RunOptions& opts) {
    LearnerSet set;
    for (const auto& lc : cfg.learners) {
        if (!opts.model_filter.empty() &&
            std::find(opts.model_filter.begin(), opts.model_filter.end(), lc.name) ==
                opts.model_filter.end()) {
            continue;
        }
        set.names.push_back(lc.name);
        set.kinds[lc.name] = lc.kind;
        set.by_name[lc.name] = make_learner(lc);
    }
    std::sort(set.names.begin(), set.names.end());
    if (set.names.empty()) throw ConfigError("no learners selected");
    return set;
}

std::vector<Modality> filtered_modalities(const ExperimentConfig& cfg, const RunOptions& opts) {
    std::vector<Modality> mods;
    for (auto m : cfg.modalities) {
        if (!opts.modality_filter || *opts.modality_filter == m) mods.push_back(m);
    }
    if (mods.empty()) throw ConfigError("no modalities selected");
    return mods;
}

int64_t wall_clock_seconds() { return static_cast<int64_t>(std::time(nullptr)); }

} // namespace

// --- selection phase -----------------------------------------------------------

std::string SelectionSummary::cell_key(const std::string& concept_name, const std::string& model,
                                       Modality m) {
    return concept_name + "|" + model + "|" + std::string(modality_name(m));
}

std::string SelectionSummary::phase_key(const std::string& model, Modality m) {
    return model + "|" + std::string(modality_name(m));
}

SelectionSummary selection_summary_from_cache(const ResponseCache& cache,
                                              const ExperimentConfig& cfg,
                                              const RunOptions& opts) {
    SelectionSummary s;
    s.concepts = cfg.concepts;
    std::sort(s.concepts.begin(), s.concepts.end());
    for (const auto& l : cfg.learners) {
        if (opts.model_filter.empty() ||
            std::find(opts.model_filter.begin(), opts.model_filter.end(), l.name) !=
                opts.model_filter.end()) {
            s.models.push_back(l.name);
        }
    }
    std::sort(s.models.begin(), s.models.end());
    s.modalities = filtered_modalities(cfg, opts);

    const std::set<std::string> model_set(s.models.begin(), s.models.end());
    const std::set<std::string> concept_set(s.concepts.begin(), s.concepts.end());

    std::map<std::string, std::vector<TrialRecord>> per_phase;
    for (const auto& r : cache.records()) {
        if (r.temperature != cfg.protocol.selection_temperature) continue;
        if (r.prompt_version != kPromptVersion) continue;
        if (!model_set.count(r.model) || !concept_set.count(r.concept_name)) continue;
        if (std::find(s.modalities.begin(), s.modalities.end(), r.modality) ==
            s.modalities.end())
            continue;

        const auto key = SelectionSummary::cell_key(r.concept_name, r.model, r.modality);
        auto& cell = s.cells[key];
        ++cell.prompts;
        if (r.judgment.verdict == Verdict::correct) ++cell.correct;
        if (r.judgment.verdict == Verdict::wrong_concept) {
            ++s.cells[SelectionSummary::cell_key(r.judgment.predicted, r.model, r.modality)].mistaken_for;
        }
        ++s.total_prompts[SelectionSummary::phase_key(r.model, r.modality)];
        per_phase[SelectionSummary::phase_key(r.model, r.modality)].push_back(r);
    }
    for (const auto& [key, records] : per_phase) {
        s.confusion.emplace(key, confusion_matrix(records, s.concepts));
    }
    return s;
}

std::map<std::string, PromptCount> count_selection_prompts(const ExperimentConfig& cfg,
                                                           const RunOptions& opts) {
    cfg.validate();
    const uint64_t seed = opts.seed_override.value_or(cfg.sample.seed);
    const auto prepared = prepare_concepts(cfg, seed);
    const auto mods = filtered_modalities(cfg, opts);
    ResponseCache cache =
        fs::exists(cfg.cache_path()) ? ResponseCache(cfg.cache_path()) : ResponseCache();

    std::map<std::string, PromptCount> out;
    for (const auto& lc : cfg.learners) {
        if (!opts.model_filter.empty() &&
            std::find(opts.model_filter.begin(), opts.model_filter.end(), lc.name) ==
                opts.model_filter.end())
            continue;
        for (auto m : mods) {
            auto& count = out[SelectionSummary::phase_key(lc.name, m)];
            for (const auto& pc : prepared) {
                for (const auto& [eps, drawing] : pc.rungs) {
                    ++count.total;
                    const auto key = TrialRecord::cache_key_for(
                        lc.name, m, drawing.id, eps, cfg.protocol.selection_temperature);
                    if (cache.count(key) > 0) ++count.cached;
                }
            }
        }
    }
    return out;
}

SelectionSummary run_selection_phase(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const uint64_t seed = opts.seed_override.value_or(cfg.sample.seed);
    Manifest manifest = open_manifest(cfg, opts);

    const auto prepared = prepare_concepts(cfg, seed);
    const auto table = HyponymTable::load_csv(cfg.hyponyms_path, cfg.concepts);
    const auto mods = filtered_modalities(cfg, opts);
    LearnerSet learners = build_learners(cfg, opts);
    ResponseCache cache(cfg.cache_path());

    struct Task {
        Learner* learner = nullptr;
        LearnerKind kind = LearnerKind::oracle_deterministic;
        const Drawing* drawing = nullptr;
        double epsilon = 0.0;
        Modality modality = Modality::bitmap;
        int64_t enumeration = 0; // logical timestamp for oracle learners
    };

    std::vector<Task> todo;
    int64_t enumeration = 0;
    for (const auto& name : learners.names) {
        for (const auto& pc : prepared) {
            for (const auto& [eps, drawing] : pc.rungs) {
                for (auto m : mods) {
                    const int64_t task_no = enumeration++;
                    const auto key = TrialRecord::cache_key_for(
                        name, m, drawing.id, eps, cfg.protocol.selection_temperature);
                    if (cache.count(key) > 0) continue; // resume: already answered
                    todo.push_back(Task{learners.by_name.at(name).get(),
                                        learners.kinds.at(name), &drawing, eps, m, task_no});
                }
            }
        }
    }

    if (!opts.dry_run) {
        const auto run_task = [&](const Task& t) {
            const Stimulus stim = make_stimulus(*t.drawing, t.epsilon, t.modality);
            SplitRng rng(derive_seed(seed, "select", t.learner->name(),
                                     modality_name(t.modality), stim.drawing_id,
                                     eps_key(t.epsilon)));
            const int64_t ts = t.kind == LearnerKind::remote ? wall_clock_seconds()
                                                             : t.enumeration;
            identify(*t.learner, stim, cfg.protocol.selection_temperature, table, cache,
                     /*trial_index=*/0, ts, &rng);
        };

        if (cfg.concurrency <= 1) {
            for (const auto& t : todo) run_task(t);
        } else {
            std::atomic<size_t> next{0};
            std::vector<std::thread> workers;
            const int n_workers = std::min<int>(cfg.concurrency, static_cast<int>(todo.size()));
            for (int w = 0; w < n_workers; ++w) {
                workers.emplace_back([&] {
                    for (;;) {
                        const size_t i = next.fetch_add(1);
                        if (i >= todo.size()) return;
                        run_task(todo[i]);
                    }
                });
            }
            for (auto& w : workers) w.join();
        }

        manifest.selection_completed = true;
        for (const auto& name : learners.names) {
            for (auto m : mods) {
                int n = 0;
                for (const auto& r : cache.records()) {
                    if (r.model == name && r.modality == m &&
                        r.temperature == cfg.protocol.selection_temperature)
                        ++n;
                }
                manifest.selection_prompts[SelectionSummary::phase_key(name, m)] = n;
            }
        }
        save_manifest(cfg.manifest_path(), manifest);
    }

    SelectionSummary summary = selection_summary_from_cache(cache, cfg, opts);
    if (!opts.dry_run) {
        // Keep teaching-phase reports intact if that phase already ran.
        const TeachingSummary teaching = teaching_summary_from_cache(cache, cfg, opts);
        std::vector<CorrelationRow> corr;
        if (!teaching.rows.empty()) {
            const PriorTable priors = load_priors(cfg.priors_path);
            corr = correlation_rows(summary, teaching, priors);
        }
        emit_reports(cfg.output_dir, summary, teaching, corr);
    }
    return summary;
}

// --- teaching-size phase -----------------------------------------------------------

namespace {

// Candidates for one (model, modality, concept): the rungs judged correct in
// the selection phase.
std::vector<Stimulus> candidates_from_selection(const ResponseCache& cache,
                                                const ExperimentConfig& cfg,
                                                const std::string& model, Modality m,
                                                const PreparedConcept& pc,
                                                bool render_payload) {
    std::vector<Stimulus> out;
    for (const auto& [eps, drawing] : pc.rungs) {
        const auto key = TrialRecord::cache_key_for(model, m, drawing.id, eps,
                                                    cfg.protocol.selection_temperature);
        const auto records = cache.records_for(key);
        if (records.empty() || records.front()->judgment.verdict != Verdict::correct) continue;
        if (render_payload) {
            out.push_back(make_stimulus(drawing, eps, m));
        } else {
            Stimulus st;
            st.drawing_id = drawing.id;
            st.concept_name = pc.concept_name;
            st.epsilon = eps;
            st.modality = m;
            st.segment_count = segment_count(drawing);
            out.push_back(std::move(st));
        }
    }
    return out;
}

void sort_ts_rows(std::vector<TsRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const TsRow& a, const TsRow& b) {
        if (a.result.modality != b.result.modality)
            return a.result.modality == Modality::bitmap;
        if (a.result.concept_name != b.result.concept_name) return a.result.concept_name < b.result.concept_name;
        return a.model < b.model;
    });
}

} // namespace

TeachingOutputs run_teaching_size_phase(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const uint64_t seed = opts.seed_override.value_or(cfg.sample.seed);
    Manifest manifest = open_manifest(cfg, opts);

    if (!fs::exists(cfg.cache_path())) {
        throw ConfigError("teaching-size phase requires the selection phase cache; "
                          "run `select` first");
    }
    ResponseCache cache(cfg.cache_path());

    const auto prepared = prepare_concepts(cfg, seed);
    const auto table = HyponymTable::load_csv(cfg.hyponyms_path, cfg.concepts);
    const auto mods = filtered_modalities(cfg, opts);
    LearnerSet learners = build_learners(cfg, opts);
    const PriorTable priors = load_priors(cfg.priors_path);
    priors.validate_covers(cfg.concepts);

    // The candidate set is defined by selection-phase results; refuse to run
    // against a cache that has none.
    for (const auto& name : learners.names) {
        for (auto m : mods) {
            bool any = false;
            for (const auto& r : cache.records()) {
                if (r.model == name && r.modality == m &&
                    r.temperature == cfg.protocol.selection_temperature) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                throw ConfigError("no selection-phase results for learner '" + name +
                                  "' / modality '" + std::string(modality_name(m)) +
                                  "'; run `select` first");
            }
        }
    }

    const Protocol proto{cfg.protocol.rho, cfg.protocol.n_trials,
                         cfg.protocol.teaching_temperature};

    TeachingSummary summary;
    for (const auto& name : learners.names) {
        Learner& learner = *learners.by_name.at(name);
        const LearnerKind kind = learners.kinds.at(name);
        for (auto m : mods) {
            for (const auto& pc : prepared) {
                auto candidates =
                    candidates_from_selection(cache, cfg, name, m, pc,
                                              /*render_payload=*/!opts.dry_run);
                if (opts.dry_run) continue;

                const TrialFn trial = [&](const Stimulus& stim, int t) {
                    const auto key = TrialRecord::cache_key_for(
                        name, m, stim.drawing_id, stim.epsilon,
                        cfg.protocol.teaching_temperature);
                    const auto existing = cache.records_for(key);
                    if (static_cast<size_t>(t) < existing.size()) {
                        return existing[static_cast<size_t>(t)]->judgment.verdict ==
                               Verdict::correct;
                    }
                    SplitRng rng(derive_seed(seed, "teach", name, modality_name(m),
                                             stim.drawing_id, eps_key(stim.epsilon),
                                             static_cast<uint64_t>(t)));
                    const int64_t ts = kind == LearnerKind::remote
                                           ? wall_clock_seconds()
                                           : static_cast<int64_t>(cache.size());
                    const TrialRecord r =
                        identify(learner, stim, cfg.protocol.teaching_temperature, table,
                                 cache, t, ts, &rng);
                    return r.judgment.verdict == Verdict::correct;
                };

                TeachingSizeResult result = teaching_size(std::move(candidates), trial, proto);
                result.concept_name = pc.concept_name;
                result.modality = m;
                summary.rows.push_back(TsRow{name, std::move(result)});
            }
        }
    }
    sort_ts_rows(summary.rows);

    if (opts.dry_run) return TeachingOutputs{};

    manifest.teaching_completed = true;
    for (const auto& name : learners.names) {
        for (auto m : mods) {
            int n = 0;
            for (const auto& r : cache.records()) {
                if (r.model == name && r.modality == m &&
                    r.temperature == cfg.protocol.teaching_temperature)
                    ++n;
            }
            manifest.teaching_prompts[SelectionSummary::phase_key(name, m)] = n;
        }
    }
    save_manifest(cfg.manifest_path(), manifest);

    const SelectionSummary selection = selection_summary_from_cache(cache, cfg, opts);
    TeachingOutputs out;
    out.summary = std::move(summary);
    out.correlations = correlation_rows(selection, out.summary, priors);
    emit_reports(cfg.output_dir, selection, out.summary, out.correlations);
    return out;
}

TeachingSummary teaching_summary_from_cache(const ResponseCache& cache,
                                            const ExperimentConfig& cfg,
                                            const RunOptions& opts) {
    const auto mods = filtered_modalities(cfg, opts);
    std::vector<std::string> models;
    for (const auto& l : cfg.learners) {
        if (opts.model_filter.empty() ||
            std::find(opts.model_filter.begin(), opts.model_filter.end(), l.name) !=
                opts.model_filter.end())
            models.push_back(l.name);
    }
    std::sort(models.begin(), models.end());
    std::vector<std::string> concepts = cfg.concepts;
    std::sort(concepts.begin(), concepts.end());

    const Protocol proto{cfg.protocol.rho, cfg.protocol.n_trials,
                         cfg.protocol.teaching_temperature};

    TeachingSummary summary;
    for (const auto& model : models) {
        for (auto m : mods) {
            // Emit rows only for phase combinations that actually ran.
            bool phase_ran = false;
            for (const auto& r : cache.records()) {
                if (r.model == model && r.modality == m &&
                    r.temperature == cfg.protocol.teaching_temperature) {
                    phase_ran = true;
                    break;
                }
            }
            if (!phase_ran) continue;

            for (const auto& concept_name : concepts) {
                // Rebuild the visited candidate list from the records.
                std::map<std::pair<int, std::pair<std::string, double>>, size_t> cand;
                std::vector<Stimulus> candidates;
                for (const auto& r : cache.records()) {
                    if (r.model != model || r.modality != m || r.concept_name != concept_name ||
                        r.temperature != cfg.protocol.teaching_temperature)
                        continue;
                    const auto key = std::make_pair(r.segments,
                                                    std::make_pair(r.drawing_id, r.epsilon));
                    if (cand.emplace(key, candidates.size()).second) {
                        Stimulus st;
                        st.drawing_id = r.drawing_id;
                        st.concept_name = concept_name;
                        st.epsilon = r.epsilon;
                        st.modality = m;
                        st.segment_count = r.segments;
                        candidates.push_back(std::move(st));
                    }
                }

                const TrialFn trial = [&](const Stimulus& stim, int t) {
                    const auto key = TrialRecord::cache_key_for(
                        model, m, stim.drawing_id, stim.epsilon,
                        cfg.protocol.teaching_temperature);
                    const auto existing = cache.records_for(key);
                    if (static_cast<size_t>(t) >= existing.size()) {
                        throw StatsError("teaching cache incomplete for " + key +
                                         "; rerun `teach` to resume");
                    }
                    return existing[static_cast<size_t>(t)]->judgment.verdict ==
                           Verdict::correct;
                };

                TeachingSizeResult result = teaching_size(std::move(candidates), trial, proto);
                result.concept_name = concept_name;
                result.modality = m;
                summary.rows.push_back(TsRow{model, std::move(result)});
            }
        }
    }
    sort_ts_rows(summary.rows);
    return summary;
}

// --- correlations ----------------------------------------------------------------

namespace {

std::string order_string(const std::map<std::string, double>& ts,
                         const std::vector<std::string>& subset) {
    std::vector<std::pair<double, std::string>> items;
    for (const auto& c : subset) items.emplace_back(ts.at(c), c);
    std::sort(items.begin(), items.end());
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += items[i].first == items[i - 1].first ? " = " : " < ";
        out += items[i].second;
    }
    return out;
}

} // namespace

std::vector<CorrelationRow> correlation_rows(const SelectionSummary& selection,
                                             const TeachingSummary& teaching,
                                             const PriorTable& priors) {
    // model -> modality -> concept -> ts
    std::map<std::string, std::map<Modality, std::map<std::string, double>>> ts;
    std::set<std::string> models;
    for (const auto& row : teaching.rows) {
        models.insert(row.model);
        if (row.result.identified()) {
            ts[row.model][row.result.modality][row.result.concept_name] =
                static_cast<double>(*row.result.ts);
        }
    }

    std::vector<CorrelationRow> out;
    for (const auto& model : models) {
        CorrelationRow row;
        row.model = model;

        const auto& bitmap_ts = ts[model][Modality::bitmap];
        const auto& coord_ts = ts[model][Modality::coordinates];
        std::vector<std::string> common;
        for (const auto& [c, v] : bitmap_ts) {
            if (coord_ts.count(c)) common.push_back(c);
        }
        row.common_concepts = static_cast<int>(common.size());
        if (!common.empty()) {
            row.order_bitmap = order_string(bitmap_ts, common);
            row.order_coordinates = order_string(coord_ts, common);
        }

        if (common.size() >= 2) {
            std::vector<double> xs, ys;
            for (const auto& c : common) {
                xs.push_back(bitmap_ts.at(c));
                ys.push_back(coord_ts.at(c));
            }
            try {
                row.kendall_ts = kendall_tau_b(xs, ys);
            } catch (const StatsError&) {
            }
            if (common.size() >= 3) {
                try {
                    std::vector<double> ps;
                    for (const auto& c : common) ps.push_back(priors.at(c));
                    const auto rb = ols_residuals(xs, ps);
                    const auto rc = ols_residuals(ys, ps);
                    row.kendall_ts_prior_residual = kendall_tau_b(rb, rc);
                } catch (const StatsError&) {
                } catch (const ConfigError&) {
                }
            }
        }

        // Accuracy correlation uses every concept with prompts in both
        // modalities, not just the identified subset.
        std::vector<double> acc_b, acc_c;
        for (const auto& concept_name : selection.concepts) {
            const auto kb =
                SelectionSummary::cell_key(concept_name, model, Modality::bitmap);
            const auto kc =
                SelectionSummary::cell_key(concept_name, model, Modality::coordinates);
            const auto itb = selection.cells.find(kb);
            const auto itc = selection.cells.find(kc);
            if (itb == selection.cells.end() || itc == selection.cells.end()) continue;
            if (itb->second.prompts == 0 || itc->second.prompts == 0) continue;
            acc_b.push_back(100.0 * itb->second.correct / itb->second.prompts);
            acc_c.push_back(100.0 * itc->second.correct / itc->second.prompts);
        }
        if (acc_b.size() >= 2) {
            try {
                row.pearson_accuracy = pearson(acc_b, acc_c);
            } catch (const StatsError&) {
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

// --- priors and reports ------------------------------------------------------------

PriorTable load_priors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open priors file: " + path);
    PriorTable table;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'concept,prior'");
        }
        const std::string concept_name = lowercase(line.substr(0, comma));
        const std::string value = line.substr(comma + 1);
        if (line_no == 1 && concept_name == "concept") continue;
        double v = 0.0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": bad prior value '" +
                              value + "'");
        }
        if (v < 0.0 || v > 1.0) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": prior " + value +
                              " outside [0,1]");
        }
        table.values[concept_name] = v;
    }
    return table;
}

namespace {

std::ofstream open_report(const std::string& out_dir, const std::string& name) {
    std::ofstream out(out_dir + "/" + name);
    if (!out) throw ConfigError("cannot write report file: " + out_dir + "/" + name);
    return out;
}

void write_ts_csv(const std::string& out_dir, const TeachingSummary& teaching, Modality m) {
    auto out = open_report(out_dir, "teaching_size_" + std::string(modality_name(m)) + ".csv");
    out << "concept,model,teaching_size,correct,trials,witness_drawing,witness_epsilon\n";
    for (const auto& row : teaching.rows) {
        if (row.result.modality != m) continue;
        out << row.result.concept_name << ',' << row.model << ',';
        if (row.result.identified()) {
            out << *row.result.ts << ',' << row.result.successes << ',' << row.result.trials
                << ',' << row.result.witness->drawing_id << ','
                << fmt("%g", row.result.witness->epsilon);
        } else {
            out << "not identified,,,,";
        }
        out << '\n';
    }
}

} // namespace

void emit_reports(const std::string& out_dir, const SelectionSummary& selection,
                  const TeachingSummary& teaching,
                  const std::vector<CorrelationRow>& correlations) {
    fs::create_directories(out_dir);

    {
        auto out = open_report(out_dir, "accuracy.csv");
        out << "concept,model,modality,prompts,correct,accuracy_pct\n";
        for (const auto& concept_name : selection.concepts) {
            for (const auto& model : selection.models) {
                for (auto m : selection.modalities) {
                    const auto it =
                        selection.cells.find(SelectionSummary::cell_key(concept_name, model, m));
                    if (it == selection.cells.end() || it->second.prompts == 0) continue;
                    const auto& cell = it->second;
                    out << concept_name << ',' << model << ',' << modality_name(m) << ','
                        << cell.prompts << ',' << cell.correct << ','
                        << fmt("%.2f", 100.0 * cell.correct / cell.prompts) << '\n';
                }
            }
        }
    }

    {
        auto out = open_report(out_dir, "fom.csv");
        out << "concept,model,modality,mistaken,total_prompts,fom\n";
        for (const auto& concept_name : selection.concepts) {
            for (const auto& model : selection.models) {
                for (auto m : selection.modalities) {
                    const auto pk = SelectionSummary::phase_key(model, m);
                    const auto total_it = selection.total_prompts.find(pk);
                    if (total_it == selection.total_prompts.end() || total_it->second == 0)
                        continue;
                    int mistaken = 0;
                    const auto it =
                        selection.cells.find(SelectionSummary::cell_key(concept_name, model, m));
                    if (it != selection.cells.end()) mistaken = it->second.mistaken_for;
                    out << concept_name << ',' << model << ',' << modality_name(m) << ','
                        << mistaken << ',' << total_it->second << ','
                        << fmt("%.6f", static_cast<double>(mistaken) / total_it->second)
                        << '\n';
                }
            }
        }
    }

    for (const auto& [key, matrix] : selection.confusion) {
        const size_t bar = key.find('|');
        const std::string file = "confusion_" + sanitize_filename(key.substr(0, bar)) + "_" +
                                 key.substr(bar + 1) + ".csv";
        auto out = open_report(out_dir, file);
        out << "actual";
        for (const auto& c : matrix.concepts) out << ',' << c;
        out << ",Other,Total\n";
        for (size_t r = 0; r < matrix.concepts.size(); ++r) {
            out << matrix.concepts[r];
            for (size_t c = 0; c <= matrix.concepts.size(); ++c) {
                out << ',' << matrix.counts[r][c] << " (" << fmt("%.2f", matrix.row_percent(r, c))
                    << "%)";
            }
            out << ',' << matrix.row_totals[r] << '\n';
        }
    }

    write_ts_csv(out_dir, teaching, Modality::bitmap);
    write_ts_csv(out_dir, teaching, Modality::coordinates);

    {
        auto out = open_report(out_dir, "correlation_summary.csv");
        out << "model,order_bitmap,order_coordinates,common_concepts,kendall_ts,"
               "kendall_ts_prior_residual,pearson_accuracy\n";
        for (const auto& row : correlations) {
            out << row.model << ',' << row.order_bitmap << ',' << row.order_coordinates << ','
                << row.common_concepts << ','
                << (row.kendall_ts ? fmt("%.4f", *row.kendall_ts) : "") << ','
                << (row.kendall_ts_prior_residual ? fmt("%.4f", *row.kendall_ts_prior_residual)
                                                  : "")
                << ',' << (row.pearson_accuracy ? fmt("%.4f", *row.pearson_accuracy) : "")
                << '\n';
        }
    }

    {
        ordered_json j;
        ordered_json acc = ordered_json::array();
        for (const auto& concept_name : selection.concepts) {
            for (const auto& model : selection.models) {
                for (auto m : selection.modalities) {
                    const auto it =
                        selection.cells.find(SelectionSummary::cell_key(concept_name, model, m));
                    if (it == selection.cells.end() || it->second.prompts == 0) continue;
                    acc.push_back({{"concept", concept_name},
                                   {"model", model},
                                   {"modality", modality_name(m)},
                                   {"prompts", it->second.prompts},
                                   {"correct", it->second.correct}});
                }
            }
        }
        j["accuracy"] = std::move(acc);
        ordered_json tsj = ordered_json::array();
        for (const auto& row : teaching.rows) {
            ordered_json r;
            r["concept"] = row.result.concept_name;
            r["model"] = row.model;
            r["modality"] = modality_name(row.result.modality);
            if (row.result.identified()) {
                r["teaching_size"] = *row.result.ts;
                r["correct"] = row.result.successes;
                r["trials"] = row.result.trials;
                r["witness_drawing"] = row.result.witness->drawing_id;
                r["witness_epsilon"] = row.result.witness->epsilon;
            } else {
                r["teaching_size"] = nullptr;
            }
            tsj.push_back(std::move(r));
        }
        j["teaching_size"] = std::move(tsj);
        ordered_json corr = ordered_json::array();
        for (const auto& row : correlations) {
            ordered_json r;
            r["model"] = row.model;
            r["order_bitmap"] = row.order_bitmap;
            r["order_coordinates"] = row.order_coordinates;
            r["common_concepts"] = row.common_concepts;
            if (row.kendall_ts) r["kendall_ts"] = *row.kendall_ts;
            if (row.kendall_ts_prior_residual)
                r["kendall_ts_prior_residual"] = *row.kendall_ts_prior_residual;
            if (row.pearson_accuracy) r["pearson_accuracy"] = *row.pearson_accuracy;
            corr.push_back(std::move(r));
        }
        j["correlations"] = std::move(corr);

        auto out = open_report(out_dir, "summary.json");
        out << j.dump(2) << '\n';
    }
}

void regenerate_reports(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (!fs::exists(cfg.cache_path())) {
        throw ConfigError("no cache at " + cfg.cache_path() + "; run `select` first");
    }
    ResponseCache cache(cfg.cache_path());
    const SelectionSummary selection = selection_summary_from_cache(cache, cfg, opts);
    const TeachingSummary teaching = teaching_summary_from_cache(cache, cfg, opts);
    std::vector<CorrelationRow> corr;
    if (!teaching.rows.empty()) {
        const PriorTable priors = load_priors(cfg.priors_path);
        priors.validate_covers(cfg.concepts);
        corr = correlation_rows(selection, teaching, priors);
    }
    emit_reports(cfg.output_dir, selection, teaching, corr);
}

} // namespace teachsize
