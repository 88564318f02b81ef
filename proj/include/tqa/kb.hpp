#pragma once
// The agent's structured external memory: TemporalFacts indexed by
// normalized (subject, relation), with span-union deduplication,
// temporal filtering, and JSON-lines persistence.

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/core.hpp"
#include "tqa/text.hpp"

namespace tqa {

struct FactKey {
    std::string subject_key;
    std::string relation_key;

    FactKey() = default;
    FactKey(std::string_view subject, std::string_view relation)
        : subject_key(normalize_key(subject)), relation_key(normalize_key(relation)) {
        if (subject_key.empty() || relation_key.empty()) {
            throw SchemaError("fact key components must be non-empty");
        }
    }
    auto operator<=>(const FactKey&) const = default;
};

struct KbStats {
    long fact_count = 0;
    long subject_count = 0;
    long relation_count = 0;
    long dedup_merges = 0;
};

enum class UpsertOutcome { inserted, merged_duplicate, extended_range };

// Stats change from one ingest call.
struct KbDelta {
    long facts_inserted = 0;
    long ranges_extended = 0;
    long duplicates_merged = 0;
    long subject_mismatches_dropped = 0;
};

class IntegrityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class KnowledgeBase {
public:
    UpsertOutcome upsert(const TemporalFact& fact) {
        std::unique_lock lock(mutex_);
        return upsert_locked(fact);
    }

    // All facts under the key; with a time filter, only those whose span
    // contains the year. Sorted by (start_year, object).
    std::vector<TemporalFact> query(const FactKey& key,
                                    std::optional<int> time_filter = std::nullopt) const {
        std::shared_lock lock(mutex_);
        std::vector<TemporalFact> out;
        auto it = facts_.find(key);
        if (it == facts_.end()) return out;
        for (const auto& f : it->second) {
            if (!time_filter || f.span_contains(*time_filter)) out.push_back(f);
        }
        std::sort(out.begin(), out.end(), [](const TemporalFact& a, const TemporalFact& b) {
            long long sa = a.start_year ? *a.start_year : std::numeric_limits<int>::min();
            long long sb = b.start_year ? *b.start_year : std::numeric_limits<int>::min();
            return std::tie(sa, a.object) < std::tie(sb, b.object);
        });
        return out;
    }

    std::vector<FactKey> keys() const {
        std::shared_lock lock(mutex_);
        std::vector<FactKey> out;
        out.reserve(facts_.size());
        for (const auto& [k, v] : facts_) out.push_back(k);
        return out;
    }

    KbStats stats() const {
        std::shared_lock lock(mutex_);
        KbStats s;
        std::vector<std::string> subjects, relations;
        for (const auto& [k, v] : facts_) {
            s.fact_count += static_cast<long>(v.size());
            subjects.push_back(k.subject_key);
            relations.push_back(k.relation_key);
        }
        auto uniq = [](std::vector<std::string>& v) {
            std::sort(v.begin(), v.end());
            return static_cast<long>(std::unique(v.begin(), v.end()) - v.begin());
        };
        s.subject_count = uniq(subjects);
        s.relation_count = uniq(relations);
        s.dedup_merges = dedup_merges_;
        return s;
    }

    // Runs the extractor over every text in the bundle and stores the
    // facts whose subject matches. Mismatched subjects are dropped and
    // counted. Each text segment commits all-or-nothing.
    KbDelta ingest_document(
        const EvidenceBundle& doc, const std::string& subject,
        const std::function<std::vector<TemporalFact>(const std::string&)>& extractor) {
        KbDelta delta;
        std::string subject_key = normalize_key(subject);
        for (const auto& [ts, text] : doc.texts) {
            std::vector<TemporalFact> facts = extractor(text);  // may throw; nothing stored yet
            std::unique_lock lock(mutex_);
            for (const auto& f : facts) {
                if (normalize_key(f.subject) != subject_key) {
                    ++delta.subject_mismatches_dropped;
                    continue;
                }
                switch (upsert_locked(f)) {
                    case UpsertOutcome::inserted: ++delta.facts_inserted; break;
                    case UpsertOutcome::extended_range: ++delta.ranges_extended; break;
                    case UpsertOutcome::merged_duplicate: ++delta.duplicates_merged; break;
                }
            }
        }
        return delta;
    }

    // JSON lines: header {format_version, created_at, stats}, then one
    // fact per line.
    void save(const std::string& path, const std::string& created_at = "") const {
        std::shared_lock lock(mutex_);
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write KB file: " + path);
        KbStats s;
        for (const auto& [k, v] : facts_) s.fact_count += static_cast<long>(v.size());
        s.dedup_merges = dedup_merges_;
        nlohmann::json header = {{"format", "tqa-kb"},
                                 {"format_version", 1},
                                 {"created_at", created_at},
                                 {"stats", {{"fact_count", s.fact_count},
                                            {"dedup_merges", s.dedup_merges}}}};
        out << header.dump() << "\n";
        for (const auto& [k, v] : facts_) {
            for (const auto& f : v) {
                nlohmann::json prov = nlohmann::json::array();
                for (const auto& p : f.provenance) {
                    prov.push_back({{"doc_id", p.doc_id}, {"start", p.start}, {"end", p.end}});
                }
                nlohmann::json j = {{"subject", f.subject},
                                    {"relation", f.relation},
                                    {"object", f.object},
                                    {"start_year", f.start_year ? nlohmann::json(*f.start_year)
                                                                : nlohmann::json(nullptr)},
                                    {"end_year", f.end_year ? nlohmann::json(*f.end_year)
                                                            : nlohmann::json(nullptr)},
                                    {"provenance", prov}};
                out << j.dump() << "\n";
            }
        }
    }

    static std::unique_ptr<KnowledgeBase> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read KB file: " + path);
        std::string line;
        if (!std::getline(in, line)) throw IntegrityError("KB file empty (no header): " + path);
        nlohmann::json header;
        try {
            header = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw IntegrityError("KB header unreadable: " + std::string(e.what()));
        }
        if (header.value("format", "") != "tqa-kb") {
            throw IntegrityError("not a KB file: " + path);
        }
        if (header.value("format_version", 0) != 1) {
            throw std::runtime_error("KB format version " +
                                     std::to_string(header.value("format_version", 0)) +
                                     " requires migration (this build reads version 1)");
        }
        auto kb = std::make_unique<KnowledgeBase>();
        long declared = -1;
        if (header.contains("stats") && header["stats"].contains("fact_count")) {
            declared = header["stats"]["fact_count"].get<long>();
        }
        long loaded = 0;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
                std::vector<Provenance> prov;
                for (const auto& p : j.value("provenance", nlohmann::json::array())) {
                    prov.push_back({p["doc_id"].get<std::string>(), p["start"].get<std::size_t>(),
                                    p["end"].get<std::size_t>()});
                }
                auto opt_year = [&](const char* field) -> std::optional<int> {
                    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
                    return j[field].get<int>();
                };
                TemporalFact f(j.at("subject").get<std::string>(),
                               j.at("relation").get<std::string>(),
                               j.at("object").get<std::string>(), opt_year("start_year"),
                               opt_year("end_year"), std::move(prov));
                kb->insert_raw(std::move(f));
                ++loaded;
            } catch (const std::exception& e) {
                throw IntegrityError("KB file corrupted at line " + std::to_string(lineno) + ": " +
                                     e.what());
            }
        }
        if (declared >= 0 && declared != loaded) {
            throw IntegrityError("KB file truncated: header declares " + std::to_string(declared) +
                                 " facts, found " + std::to_string(loaded));
        }
        if (header.contains("stats") && header["stats"].contains("dedup_merges")) {
            kb->dedup_merges_ = header["stats"]["dedup_merges"].get<long>();
        }
        return kb;
    }

    std::vector<TemporalFact> all_facts() const {
        std::shared_lock lock(mutex_);
        std::vector<TemporalFact> out;
        for (const auto& [k, v] : facts_) out.insert(out.end(), v.begin(), v.end());
        return out;
    }

private:
    // Spans overlap or touch (adjacent years union too); absent bounds
    // are infinite.
    static bool spans_mergeable(const TemporalFact& a, const TemporalFact& b) {
        long long a_start = a.start_year ? *a.start_year : std::numeric_limits<int>::min();
        long long a_end = a.end_year ? *a.end_year : std::numeric_limits<int>::max();
        long long b_start = b.start_year ? *b.start_year : std::numeric_limits<int>::min();
        long long b_end = b.end_year ? *b.end_year : std::numeric_limits<int>::max();
        return a_start <= b_end + 1 && b_start <= a_end + 1;
    }

    static void append_provenance(TemporalFact& into, const TemporalFact& from) {
        for (const auto& p : from.provenance) {
            if (std::find(into.provenance.begin(), into.provenance.end(), p) ==
                into.provenance.end()) {
                into.provenance.push_back(p);
            }
        }
    }

    UpsertOutcome upsert_locked(const TemporalFact& fact) {
        FactKey key(fact.subject, fact.relation);
        auto& bucket = facts_[key];
        std::string obj_key = normalize_key(fact.object);
        for (auto& existing : bucket) {
            if (normalize_key(existing.object) != obj_key) continue;
            if (existing.start_year == fact.start_year && existing.end_year == fact.end_year) {
                append_provenance(existing, fact);
                ++dedup_merges_;
                return UpsertOutcome::merged_duplicate;
            }
            if (spans_mergeable(existing, fact)) {
                if (!existing.start_year || !fact.start_year) {
                    existing.start_year.reset();
                } else {
                    existing.start_year = std::min(*existing.start_year, *fact.start_year);
                }
                if (!existing.end_year || !fact.end_year) {
                    existing.end_year.reset();
                } else {
                    existing.end_year = std::max(*existing.end_year, *fact.end_year);
                }
                append_provenance(existing, fact);
                return UpsertOutcome::extended_range;
            }
        }
        bucket.push_back(fact);
        return UpsertOutcome::inserted;
    }

    void insert_raw(TemporalFact f) {
        FactKey key(f.subject, f.relation);
        facts_[key].push_back(std::move(f));
    }

    std::map<FactKey, std::vector<TemporalFact>> facts_;
    long dedup_merges_ = 0;
    mutable std::shared_mutex mutex_;
};

}  // namespace tqa
