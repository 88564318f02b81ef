#pragma once
// Reader/writer for the benchmark JSON format. The file is either one
// event object or an array of them. Unknown keys are preserved verbatim
// so files round-trip.

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/core.hpp"

namespace tqa {

using json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t byte_offset)
        : std::runtime_error(std::move(msg)), byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

struct Dump {
    std::string url;
    std::string body_par;
    std::map<std::string, std::string> infobox;
    json extras = json::object();
    bool operator==(const Dump& o) const {
        return url == o.url && body_par == o.body_par && infobox == o.infobox &&
               extras == o.extras;
    }
};

struct Incident {
    int q_year = 0;
    int map_year = 0;
    std::string question;
    std::vector<GoldAnswer> answer;
    Dump dump;
    std::optional<json> ans_comp;  // absent serializes as null
    std::optional<json> llm_resp;
    json extras = json::object();
    bool operator==(const Incident& o) const {
        return q_year == o.q_year && map_year == o.map_year && question == o.question &&
               answer == o.answer && dump == o.dump && ans_comp == o.ans_comp &&
               llm_resp == o.llm_resp && extras == o.extras;
    }
};

struct BenchmarkEvent {
    long long event_id = 0;
    std::map<std::string, Incident> incidents;  // key: four-digit year string
    json extras = json::object();
    bool operator==(const BenchmarkEvent& o) const {
        return event_id == o.event_id && incidents == o.incidents && extras == o.extras;
    }
};

namespace detail {

inline bool is_year_key(const std::string& k) {
    return k.size() == 4 && std::all_of(k.begin(), k.end(),
                                        [](char c) { return c >= '0' && c <= '9'; });
}

inline const json& require(const json& obj, const char* field, long long event_id) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw SchemaError("event " + std::to_string(event_id) + ": missing required field '" +
                          field + "'");
    }
    return *it;
}

inline Incident parse_incident(const json& j, long long event_id, const std::string& year_key) {
    if (!j.is_object()) {
        throw SchemaError("event " + std::to_string(event_id) + ": incident '" + year_key +
                          "' is not an object");
    }
    Incident inc;
    inc.q_year = require(j, "q_year", event_id).get<int>();
    inc.map_year = require(j, "map_year", event_id).get<int>();
    inc.question = require(j, "question", event_id).get<std::string>();
    if (inc.question.empty()) {
        throw SchemaError("event " + std::to_string(event_id) + ": empty question");
    }
    const json& ans = require(j, "answer", event_id);
    if (!ans.is_array() || ans.empty()) {
        throw SchemaError("event " + std::to_string(event_id) +
                          ": field 'answer' must be a non-empty array");
    }
    for (const auto& a : ans) {
        GoldAnswer g;
        g.name = require(a, "name", event_id).get<std::string>();
        if (g.name.empty()) {
            throw SchemaError("event " + std::to_string(event_id) + ": empty answer name");
        }
        if (a.contains("wikidata_id") && !a["wikidata_id"].is_null()) {
            g.wikidata_id = a["wikidata_id"].get<std::string>();
        }
        inc.answer.push_back(std::move(g));
    }
    const json& dump = require(j, "dump", event_id);
    inc.dump.url = require(dump, "url", event_id).get<std::string>();
    inc.dump.body_par = require(dump, "body_par", event_id).get<std::string>();
    const json& ib = require(dump, "infobox", event_id);
    if (!ib.is_object()) {
        throw SchemaError("event " + std::to_string(event_id) + ": infobox must be an object");
    }
    for (auto it = ib.begin(); it != ib.end(); ++it) {
        inc.dump.infobox[it.key()] =
            it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    for (auto it = dump.begin(); it != dump.end(); ++it) {
        if (it.key() != "url" && it.key() != "body_par" && it.key() != "infobox") {
            inc.dump.extras[it.key()] = it.value();
        }
    }
    if (auto it = j.find("ans_comp"); it != j.end() && !it->is_null()) inc.ans_comp = *it;
    if (auto it = j.find("llm_resp"); it != j.end() && !it->is_null()) inc.llm_resp = *it;
    static const char* known[] = {"q_year", "map_year", "question",
                                  "answer", "dump",     "ans_comp", "llm_resp"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool k = false;
        for (const char* f : known) k = k || it.key() == f;
        if (!k) inc.extras[it.key()] = it.value();
    }
    return inc;
}

inline BenchmarkEvent parse_event(const json& j) {
    if (!j.is_object()) throw SchemaError("event entry is not an object");
    auto id_it = j.find("event_id");
    if (id_it == j.end()) throw SchemaError("event missing required field 'event_id'");
    BenchmarkEvent ev;
    ev.event_id = id_it->get<long long>();
    const json& incidents = require(j, "incidents", ev.event_id);
    if (!incidents.is_object()) {
        throw SchemaError("event " + std::to_string(ev.event_id) +
                          ": 'incidents' must be an object");
    }
    for (auto it = incidents.begin(); it != incidents.end(); ++it) {
        if (!is_year_key(it.key())) {
            throw SchemaError("event " + std::to_string(ev.event_id) +
                              ": incident key '" + it.key() + "' is not a four-digit year");
        }
        ev.incidents[it.key()] = parse_incident(it.value(), ev.event_id, it.key());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "event_id" && it.key() != "incidents") ev.extras[it.key()] = it.value();
    }
    return ev;
}

}  // namespace detail

inline std::vector<BenchmarkEvent> parse_benchmark(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    std::vector<BenchmarkEvent> events;
    if (root.is_array()) {
        for (const auto& j : root) events.push_back(detail::parse_event(j));
    } else {
        events.push_back(detail::parse_event(root));
    }
    std::map<long long, int> seen;
    for (const auto& ev : events) {
        if (++seen[ev.event_id] > 1) {
            throw SchemaError("duplicate event_id " + std::to_string(ev.event_id));
        }
    }
    return events;
}

inline json to_json(const Incident& inc) {
    json j = json::object();
    j["q_year"] = inc.q_year;
    j["map_year"] = inc.map_year;
    j["question"] = inc.question;
    json answers = json::array();
    for (const auto& a : inc.answer) {
        answers.push_back({{"name", a.name}, {"wikidata_id", a.wikidata_id}});
    }
    j["answer"] = std::move(answers);
    json dump = json::object();
    dump["url"] = inc.dump.url;
    dump["body_par"] = inc.dump.body_par;
    dump["infobox"] = inc.dump.infobox;
    for (auto it = inc.dump.extras.begin(); it != inc.dump.extras.end(); ++it) {
        dump[it.key()] = it.value();
    }
    j["dump"] = std::move(dump);
    j["ans_comp"] = inc.ans_comp ? *inc.ans_comp : json(nullptr);
    j["llm_resp"] = inc.llm_resp ? *inc.llm_resp : json(nullptr);
    for (auto it = inc.extras.begin(); it != inc.extras.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline json to_json(const BenchmarkEvent& ev) {
    json j = json::object();
    j["event_id"] = ev.event_id;
    json incidents = json::object();
    for (const auto& [year, inc] : ev.incidents) {
        if (!detail::is_year_key(year)) {
            throw SchemaError("event " + std::to_string(ev.event_id) + ": incident key '" + year +
                              "' is not a four-digit year");
        }
        incidents[year] = to_json(inc);
    }
    j["incidents"] = std::move(incidents);
    for (auto it = ev.extras.begin(); it != ev.extras.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline std::string serialize_benchmark(const std::vector<BenchmarkEvent>& events) {
    json root = json::array();
    for (const auto& ev : events) root.push_back(to_json(ev));
    return root.dump(2);
}

}  // namespace tqa
