#include "teachsize/drawing.hpp"

#include "teachsize/errors.hpp"
#include "teachsize/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace teachsize {

using nlohmann::json;
using nlohmann::ordered_json;

int segment_count(const Drawing& d) {
    int total = 0;
    for (const auto& s : d.strokes) total += s.segment_count();
    return total;
}

uint64_t geometry_hash(const Drawing& d) {
    uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a64_u64(d.strokes.size(), h);
    for (const auto& s : d.strokes) {
        h = fnv1a64_u64(s.points.size(), h);
        for (const auto& p : s.points) {
            h = fnv1a64_u64(static_cast<uint64_t>(p.x) << 32 | static_cast<uint32_t>(p.y), h);
        }
    }
    return h;
}

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

int coord_from_json(const json& v, const char* field, size_t stroke, size_t idx) {
    if (!v.is_number_integer()) {
        std::ostringstream os;
        os << "drawing[" << stroke << "]." << field << "[" << idx << "]: not an integer";
        throw ParseError(os.str());
    }
    const auto c = v.get<int64_t>();
    if (c < 0 || c > 255) {
        std::ostringstream os;
        os << "drawing[" << stroke << "]." << field << "[" << idx << "]: coordinate " << c
           << " outside [0,255]";
        throw ParseError(os.str());
    }
    return static_cast<int>(c);
}

std::string hash_id(const Drawing& d) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "h%016llx",
                  static_cast<unsigned long long>(geometry_hash(d)));
    return buf;
}

} // namespace

Drawing parse_dataset_line(std::string_view line) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("record is not valid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError("record: not a JSON object");
    if (!rec.contains("word") || !rec["word"].is_string())
        throw ParseError("word: missing or not a string");
    if (!rec.contains("recognized") || !rec["recognized"].is_boolean())
        throw ParseError("recognized: missing or not a boolean");
    if (!rec.contains("drawing") || !rec["drawing"].is_array() || rec["drawing"].empty())
        throw ParseError("drawing: missing, not an array, or empty");

    Drawing d;
    d.concept_name = lowercase(rec["word"].get<std::string>());
    d.recognized = rec["recognized"].get<bool>();

    size_t si = 0;
    for (const auto& js : rec["drawing"]) {
        if (!js.is_array() || js.size() != 2 || !js[0].is_array() || !js[1].is_array()) {
            std::ostringstream os;
            os << "drawing[" << si << "]: stroke is not a pair of coordinate arrays";
            throw ParseError(os.str());
        }
        const auto& xs = js[0];
        const auto& ys = js[1];
        if (xs.size() != ys.size()) {
            std::ostringstream os;
            os << "drawing[" << si << "]: x and y arrays differ in length";
            throw ParseError(os.str());
        }
        if (xs.size() < 2) {
            std::ostringstream os;
            os << "drawing[" << si << "]: stroke has " << xs.size() << " point(s), need >= 2";
            throw ParseError(os.str());
        }
        Stroke stroke;
        for (size_t i = 0; i < xs.size(); ++i) {
            Point p{coord_from_json(xs[i], "x", si, i), coord_from_json(ys[i], "y", si, i)};
            // Collapse consecutive duplicates so zero-length segments never
            // enter the segment count.
            if (stroke.points.empty() || !(stroke.points.back() == p)) {
                stroke.points.push_back(p);
            }
        }
        if (stroke.points.size() < 2) {
            std::ostringstream os;
            os << "drawing[" << si << "]: stroke collapses to a single point";
            throw ParseError(os.str());
        }
        d.strokes.push_back(std::move(stroke));
        ++si;
    }

    if (rec.contains("key_id") && rec["key_id"].is_string() &&
        !rec["key_id"].get<std::string>().empty()) {
        d.id = rec["key_id"].get<std::string>();
    } else {
        d.id = hash_id(d);
    }
    return d;
}

std::string to_dataset_line(const Drawing& d) {
    ordered_json rec;
    rec["key_id"] = d.id;
    rec["word"] = d.concept_name;
    rec["recognized"] = d.recognized;
    ordered_json strokes = ordered_json::array();
    for (const auto& s : d.strokes) {
        ordered_json xs = ordered_json::array();
        ordered_json ys = ordered_json::array();
        for (const auto& p : s.points) {
            xs.push_back(p.x);
            ys.push_back(p.y);
        }
        strokes.push_back(ordered_json::array({xs, ys}));
    }
    rec["drawing"] = std::move(strokes);
    return rec.dump();
}

std::vector<ConceptCorpus> load_corpus(const std::string& path,
                                       const std::set<std::string>& concept_filter,
                                       bool recognized_only, CorpusStats* stats) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file: " + path);

    CorpusStats local;
    std::map<std::string, std::vector<Drawing>> by_concept;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++local.lines_read;
        Drawing d;
        try {
            d = parse_dataset_line(line);
        } catch (const ParseError& e) {
            std::ostringstream os;
            os << path << ":" << line_no << ": " << e.what();
            throw ParseError(os.str());
        }
        if (!concept_filter.empty() && !concept_filter.count(d.concept_name)) {
            ++local.skipped_unknown_concept;
            continue;
        }
        if (recognized_only && !d.recognized) {
            ++local.skipped_unrecognized;
            continue;
        }
        by_concept[d.concept_name].push_back(std::move(d));
    }

    std::vector<ConceptCorpus> out;
    out.reserve(by_concept.size());
    for (auto& [concept_name, drawings] : by_concept) {
        out.push_back(ConceptCorpus{concept_name, std::move(drawings)});
    }
    if (stats) *stats = local;
    return out;
}

} // namespace teachsize
