#pragma once

#include "teachsize/render.hpp"
#include "teachsize/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace teachsize {

enum class LearnerKind { remote, oracle_deterministic, oracle_stochastic };

LearnerKind learner_kind_from_name(std::string_view name);
std::string_view learner_kind_name(LearnerKind k);

struct LearnerConfig {
    std::string name;      // label used in records and reports
    LearnerKind kind = LearnerKind::oracle_deterministic;
    std::string model_name;
    double temperature = 0.0; // default; phases override per call

    // remote only
    std::string endpoint;                    // e.g. http://localhost:8080
    std::string path = "/v1/chat/completions";
    std::string api_key_env;                 // env var holding the key; value never logged
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    int max_retries = 3;
    double request_timeout_sec = 60.0;
    double backoff_base_ms = 500.0;
    double rate_limit_per_sec = 1.0;

    // oracle only
    int64_t threshold = 1;          // answers truthfully iff segments >= threshold
    double success_probability = 1.0;

    void validate() const;
};

// Accepted answers per concept: the concept name itself plus its hyponyms.
// Accepted sets must be pairwise disjoint across concepts.
class HyponymTable {
public:
    HyponymTable() = default;
    explicit HyponymTable(std::vector<std::string> concepts);

    static HyponymTable load_csv(const std::string& path,
                                 const std::vector<std::string>& concepts);

    void add(const std::string& concept_name, const std::string& answer);
    void validate() const; // throws ConfigError on overlapping accepted sets

    const std::vector<std::string>& concepts() const { return concepts_; }
    const std::set<std::string>& accepted(const std::string& concept_name) const;

private:
    std::vector<std::string> concepts_;
    std::map<std::string, std::set<std::string>> accepted_;
};

enum class Verdict { correct, wrong_concept, other };

std::string_view verdict_name(Verdict v);
Verdict verdict_from_name(std::string_view name);

struct Judgment {
    Verdict verdict = Verdict::other;
    std::string predicted; // set iff verdict == wrong_concept
};

// lowercase, trim, strip terminal punctuation
std::string normalize_answer(std::string_view raw);

Judgment judge(std::string_view raw, const std::string& expected, const HyponymTable& table);

struct PromptPayload {
    std::string text;
    std::string image_base64; // empty for the coordinates modality
};

// Renders the per-modality prompt template around the stimulus payload.
PromptPayload build_prompt(const Stimulus& stim);

// Bumped whenever a prompt template changes, so cached answers from older
// templates are never reused.
inline constexpr int kPromptVersion = 1;

// One learner query, the persisted unit of evidence.
struct TrialRecord {
    std::string model;
    Modality modality = Modality::bitmap;
    std::string concept_name; // expected concept
    std::string drawing_id;
    double epsilon = 0.0;
    int segments = 0;
    double temperature = 0.0;
    int trial = 0; // index within a (key) group; 0 for selection-phase prompts
    int prompt_version = kPromptVersion;
    std::string raw_answer;
    Judgment judgment;
    int64_t timestamp = 0;

    std::string cache_key() const;
    static std::string cache_key_for(const std::string& model, Modality m,
                                     const std::string& drawing_id, double epsilon,
                                     double temperature, int prompt_version = kPromptVersion);
};

std::string trial_record_to_json(const TrialRecord& r);
TrialRecord trial_record_from_json(std::string_view line);

// Append-only NDJSON store of TrialRecords. Appends are serialized and
// flushed before identify() returns, so an interrupted run loses at most the
// in-flight call.
class ResponseCache {
public:
    ResponseCache() = default;                  // in-memory only
    explicit ResponseCache(const std::string& path); // loads existing records

    void append(const TrialRecord& r);
    size_t size() const { return records_.size(); }
    const std::vector<TrialRecord>& records() const { return records_; }
    size_t count(const std::string& cache_key) const;
    std::vector<const TrialRecord*> records_for(const std::string& cache_key) const;

private:
    std::string path_;
    std::vector<TrialRecord> records_;
    std::map<std::string, std::vector<size_t>> by_key_;
    mutable std::mutex mutex_;
};

class Learner {
public:
    virtual ~Learner() = default;
    virtual const LearnerConfig& config() const = 0;
    const std::string& name() const { return config().name; }

    // Returns the model's trimmed text answer. rng may be null for learners
    // that do not draw random numbers.
    virtual std::string identify_raw(const Stimulus& stim, double temperature,
                                     SplitRng* rng) = 0;
};

// Test double for a vision-language learner: answers the true concept when the
// stimulus has at least `threshold` segments (with probability p), otherwise
// "unknown".
std::string oracle_identify(int64_t threshold, double p, const Stimulus& stim, SplitRng& rng);

class OracleLearner : public Learner {
public:
    explicit OracleLearner(LearnerConfig cfg);
    const LearnerConfig& config() const override { return cfg_; }
    std::string identify_raw(const Stimulus& stim, double temperature, SplitRng* rng) override;

private:
    LearnerConfig cfg_;
};

// Chat-completion-style HTTPS+JSON client with exponential backoff and a
// token-bucket rate limit. One client covers any vendor that speaks the
// /chat/completions shape; base URL, path and auth header are configurable.
class RemoteLearner : public Learner {
public:
    explicit RemoteLearner(LearnerConfig cfg);
    ~RemoteLearner() override;
    const LearnerConfig& config() const override { return cfg_; }
    std::string identify_raw(const Stimulus& stim, double temperature, SplitRng* rng) override;

private:
    struct Impl;
    LearnerConfig cfg_;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg);

// Runs one trial end to end: query, judge, and append to the cache before
// returning. This is the only path the pipeline uses to talk to a learner.
TrialRecord identify(Learner& learner, const Stimulus& stim, double temperature,
                     const HyponymTable& table, ResponseCache& cache, int trial_index,
                     int64_t timestamp, SplitRng* rng);

} // namespace teachsize
