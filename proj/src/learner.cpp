#include "teachsize/learner.hpp"

#include "teachsize/errors.hpp"

#ifdef TEACHSIZE_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace teachsize {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kVisionPrompt =
    "Your task is to identify a concept drawn by hand. You will be provided with an image "
    "corresponding to a concept drawn by hand. Your task is to identify, based on the "
    "provided picture, the concept that someone has attempted to draw. Please reply only "
    "with the name of the concept.";

constexpr std::string_view kTikzPromptHead =
    "Your task is to identify a concept drawn by hand. You will be provided a TikZ picture "
    "format corresponding to a concept, where each stroke is indicated by the command "
    "'draw' followed by a series of points in '(x,y)' format.\n"
    "The points are connected by straight lines, denoted by '--'. The strokes collectively "
    "represent a concept. Below is the TikZ picture code enclosed within triple backticks:\n";

constexpr std::string_view kTikzPromptTail =
    ".\nYour task is to identify, based on the provided TikZ picture, the concept that "
    "someone has attempted to draw. Please reply only with the name of the concept.";

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace

LearnerKind learner_kind_from_name(std::string_view name) {
    if (name == "remote") return LearnerKind::remote;
    if (name == "oracle-deterministic") return LearnerKind::oracle_deterministic;
    if (name == "oracle-stochastic") return LearnerKind::oracle_stochastic;
    throw ConfigError("unknown learner kind: " + std::string(name));
}

std::string_view learner_kind_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::remote: return "remote";
        case LearnerKind::oracle_deterministic: return "oracle-deterministic";
        case LearnerKind::oracle_stochastic: return "oracle-stochastic";
    }
    return "?";
}

void LearnerConfig::validate() const {
    if (name.empty()) throw ConfigError("learner: name must not be empty");
    if (temperature < 0.0 || temperature > 2.0)
        throw ConfigError("learner " + name + ": temperature must be in [0,2]");
    if (kind == LearnerKind::remote) {
        if (endpoint.empty()) throw ConfigError("learner " + name + ": endpoint required");
        if (max_retries < 0) throw ConfigError("learner " + name + ": max_retries < 0");
    } else {
        if (success_probability < 0.0 || success_probability > 1.0)
            throw ConfigError("learner " + name + ": success_probability must be in [0,1]");
    }
}

// --- hyponyms and judging ----------------------------------------------------

HyponymTable::HyponymTable(std::vector<std::string> concepts) : concepts_(std::move(concepts)) {
    std::sort(concepts_.begin(), concepts_.end());
    for (const auto& c : concepts_) accepted_[c].insert(c);
}

HyponymTable HyponymTable::load_csv(const std::string& path,
                                    const std::vector<std::string>& concepts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open hyponym table: " + path);
    HyponymTable table(concepts);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected 'concept,accepted_answer'";
            throw ConfigError(os.str());
        }
        std::string concept_name = lowercase(trim(line.substr(0, comma)));
        std::string answer = lowercase(trim(line.substr(comma + 1)));
        if (line_no == 1 && concept_name == "concept") continue; // header row
        // the table file may cover more concepts than this experiment uses
        if (std::find(concepts.begin(), concepts.end(), concept_name) == concepts.end())
            continue;
        table.add(concept_name, answer);
    }
    table.validate();
    return table;
}

void HyponymTable::add(const std::string& concept_name, const std::string& answer) {
    const auto it = accepted_.find(lowercase(concept_name));
    if (it == accepted_.end())
        throw ConfigError("hyponym table: unknown concept '" + concept_name + "'");
    it->second.insert(lowercase(answer));
}

void HyponymTable::validate() const {
    std::map<std::string, std::string> seen; // answer -> concept
    for (const auto& [concept_name, answers] : accepted_) {
        for (const auto& a : answers) {
            auto [it, inserted] = seen.emplace(a, concept_name);
            if (!inserted) {
                throw ConfigError("hyponym table: '" + a + "' accepted for both '" +
                                  it->second + "' and '" + concept_name + "'");
            }
        }
    }
}

const std::set<std::string>& HyponymTable::accepted(const std::string& concept_name) const {
    const auto it = accepted_.find(concept_name);
    if (it == accepted_.end())
        throw ConfigError("hyponym table: unknown concept '" + concept_name + "'");
    return it->second;
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::correct: return "correct";
        case Verdict::wrong_concept: return "wrong_concept";
        case Verdict::other: return "other";
    }
    return "?";
}

Verdict verdict_from_name(std::string_view name) {
    if (name == "correct") return Verdict::correct;
    if (name == "wrong_concept") return Verdict::wrong_concept;
    if (name == "other") return Verdict::other;
    throw ParseError("unknown verdict: " + std::string(name));
}

std::string normalize_answer(std::string_view raw) {
    std::string s = trim(raw);
    while (!s.empty() && std::string_view(".,!?;:\"'`").find(s.back()) != std::string_view::npos) {
        s.pop_back();
    }
    s = trim(s);
    return lowercase(std::move(s));
}

Judgment judge(std::string_view raw, const std::string& expected, const HyponymTable& table) {
    const std::string norm = normalize_answer(raw);
    if (table.accepted(expected).count(norm)) return Judgment{Verdict::correct, ""};
    for (const auto& c : table.concepts()) {
        if (c == expected) continue;
        if (table.accepted(c).count(norm)) return Judgment{Verdict::wrong_concept, c};
    }
    return Judgment{Verdict::other, ""};
}

// --- prompts ------------------------------------------------------------------

PromptPayload build_prompt(const Stimulus& stim) {
    PromptPayload p;
    if (stim.modality == Modality::bitmap) {
        p.text = std::string(kVisionPrompt);
        p.image_base64 = encode_image_payload(stim.payload);
    } else {
        p.text = std::string(kTikzPromptHead) + "```" + stim.payload + "```" +
                 std::string(kTikzPromptTail);
    }
    return p;
}

// --- trial records and cache ---------------------------------------------------

std::string TrialRecord::cache_key() const {
    return cache_key_for(model, modality, drawing_id, epsilon, temperature, prompt_version);
}

std::string TrialRecord::cache_key_for(const std::string& model, Modality m,
                                       const std::string& drawing_id, double epsilon,
                                       double temperature, int prompt_version) {
    std::ostringstream os;
    os << model << '|' << modality_name(m) << '|' << drawing_id << '|' << epsilon << '|'
       << temperature << '|' << prompt_version;
    return os.str();
}

std::string trial_record_to_json(const TrialRecord& r) {
    ordered_json j;
    j["model"] = r.model;
    j["modality"] = modality_name(r.modality);
    j["concept"] = r.concept_name;
    j["drawing_id"] = r.drawing_id;
    j["epsilon"] = r.epsilon;
    j["segments"] = r.segments;
    j["temperature"] = r.temperature;
    j["trial"] = r.trial;
    j["prompt_version"] = r.prompt_version;
    j["answer"] = r.raw_answer;
    j["verdict"] = verdict_name(r.judgment.verdict);
    j["predicted"] = r.judgment.predicted;
    j["timestamp"] = r.timestamp;
    return j.dump();
}

TrialRecord trial_record_from_json(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("cache record is not valid JSON: ") + e.what());
    }
    TrialRecord r;
    r.model = j.at("model").get<std::string>();
    r.modality = modality_from_name(j.at("modality").get<std::string>());
    r.concept_name = j.at("concept").get<std::string>();
    r.drawing_id = j.at("drawing_id").get<std::string>();
    r.epsilon = j.at("epsilon").get<double>();
    r.segments = j.at("segments").get<int>();
    r.temperature = j.at("temperature").get<double>();
    r.trial = j.at("trial").get<int>();
    r.prompt_version = j.at("prompt_version").get<int>();
    r.raw_answer = j.at("answer").get<std::string>();
    r.judgment.verdict = verdict_from_name(j.at("verdict").get<std::string>());
    r.judgment.predicted = j.at("predicted").get<std::string>();
    r.timestamp = j.at("timestamp").get<int64_t>();
    return r;
}

ResponseCache::ResponseCache(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            TrialRecord r = trial_record_from_json(line);
            by_key_[r.cache_key()].push_back(records_.size());
            records_.push_back(std::move(r));
        }
    }
}

void ResponseCache::append(const TrialRecord& r) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw ConfigError("cannot append to response cache: " + path_);
        out << trial_record_to_json(r) << '\n';
        out.flush();
    }
    by_key_[r.cache_key()].push_back(records_.size());
    records_.push_back(r);
}

size_t ResponseCache::count(const std::string& cache_key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = by_key_.find(cache_key);
    return it == by_key_.end() ? 0 : it->second.size();
}

std::vector<const TrialRecord*> ResponseCache::records_for(const std::string& cache_key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<const TrialRecord*> out;
    const auto it = by_key_.find(cache_key);
    if (it != by_key_.end()) {
        out.reserve(it->second.size());
        for (size_t i : it->second) out.push_back(&records_[i]);
    }
    return out;
}

// --- oracle learners ------------------------------------------------------------

std::string oracle_identify(int64_t threshold, double p, const Stimulus& stim, SplitRng& rng) {
    if (stim.segment_count < threshold) return "unknown";
    if (p >= 1.0) return stim.concept_name;
    return rng.bernoulli(p) ? stim.concept_name : "unknown";
}

OracleLearner::OracleLearner(LearnerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.kind == LearnerKind::oracle_deterministic) cfg_.success_probability = 1.0;
}

std::string OracleLearner::identify_raw(const Stimulus& stim, double, SplitRng* rng) {
    if (cfg_.success_probability < 1.0 && rng == nullptr)
        throw ConfigError("stochastic oracle requires a per-task rng");
    SplitRng fallback(0);
    return oracle_identify(cfg_.threshold, cfg_.success_probability, stim,
                           rng ? *rng : fallback);
}

// --- remote learner ---------------------------------------------------------------

namespace {

// Serializes request starts to at most rate_per_sec.
class TokenBucket {
public:
    explicit TokenBucket(double rate_per_sec) : interval_sec_(1.0 / rate_per_sec) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        if (next_ < now) next_ = now;
        const auto wait_until = next_;
        next_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(interval_sec_));
        lock.unlock();
        std::this_thread::sleep_until(wait_until);
    }

private:
    double interval_sec_;
    std::chrono::steady_clock::time_point next_{};
    std::mutex mutex_;
};

} // namespace

struct RemoteLearner::Impl {
    explicit Impl(const LearnerConfig& cfg)
        : client(cfg.endpoint), bucket(cfg.rate_limit_per_sec) {
        client.set_connection_timeout(std::chrono::duration<double>(cfg.request_timeout_sec));
        client.set_read_timeout(std::chrono::duration<double>(cfg.request_timeout_sec));
    }
    httplib::Client client;
    TokenBucket bucket;
};

RemoteLearner::RemoteLearner(LearnerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    impl_ = std::make_unique<Impl>(cfg_);
}

RemoteLearner::~RemoteLearner() = default;

std::string RemoteLearner::identify_raw(const Stimulus& stim, double temperature, SplitRng*) {
    const PromptPayload prompt = build_prompt(stim);

    ordered_json body;
    body["model"] = cfg_.model_name;
    ordered_json message;
    message["role"] = "user";
    if (stim.modality == Modality::bitmap) {
        ordered_json parts = ordered_json::array();
        parts.push_back({{"type", "text"}, {"text", prompt.text}});
        parts.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:image/png;base64," + prompt.image_base64}}}});
        message["content"] = std::move(parts);
    } else {
        message["content"] = prompt.text;
    }
    body["messages"] = ordered_json::array({message});
    body["temperature"] = temperature;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("learner " + cfg_.name + ": environment variable " +
                              cfg_.api_key_env + " is not set");
        }
        headers.emplace(cfg_.auth_header, cfg_.auth_prefix + key);
    }

    const int attempts_max = cfg_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts_max; ++attempt) {
        impl_->bucket.acquire();
        auto res = impl_->client.Post(cfg_.path, headers, payload, "application/json");
        if (res && res->status == 200) {
            json reply;
            try {
                reply = json::parse(res->body);
                const auto& content = reply.at("choices").at(0).at("message").at("content");
                if (content.is_string()) return trim(content.get<std::string>());
                if (content.is_array()) {
                    for (const auto& part : content) {
                        if (part.contains("text")) return trim(part["text"].get<std::string>());
                    }
                }
                last_error = "response has no text content";
            } catch (const json::exception& e) {
                last_error = std::string("cannot parse response: ") + e.what();
            }
        } else if (res) {
            last_error = "HTTP status " + std::to_string(res->status);
            // 4xx other than 429 will not get better by retrying
            if (res->status >= 400 && res->status < 500 && res->status != 429) {
                throw TransportError("learner " + cfg_.name + ": " + last_error, attempt);
            }
        } else {
            last_error = "connection failed: " + httplib::to_string(res.error());
        }
        if (attempt < attempts_max) {
            const double delay_ms = cfg_.backoff_base_ms * static_cast<double>(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
        }
    }
    throw TransportError("learner " + cfg_.name + ": " + last_error + " after " +
                             std::to_string(attempts_max) + " attempt(s)",
                         attempts_max);
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg) {
    cfg.validate();
    if (cfg.kind == LearnerKind::remote) return std::make_unique<RemoteLearner>(cfg);
    return std::make_unique<OracleLearner>(cfg);
}

TrialRecord identify(Learner& learner, const Stimulus& stim, double temperature,
                     const HyponymTable& table, ResponseCache& cache, int trial_index,
                     int64_t timestamp, SplitRng* rng) {
    TrialRecord r;
    r.model = learner.name();
    r.modality = stim.modality;
    r.concept_name = stim.concept_name;
    r.drawing_id = stim.drawing_id;
    r.epsilon = stim.epsilon;
    r.segments = stim.segment_count;
    r.temperature = temperature;
    r.trial = trial_index;
    r.raw_answer = learner.identify_raw(stim, temperature, rng);
    r.judgment = judge(r.raw_answer, stim.concept_name, table);
    r.timestamp = timestamp;
    cache.append(r);
    return r;
}

} // namespace teachsize
