#pragma once
// Shared domain types. Everything here is an immutable value after
// construction and safe to share across threads.

#include <compare>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tqa/text.hpp"

namespace tqa {

class SchemaError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Calendar date, day precision.
struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    static int days_in_month(int y, int m) {
        static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (m == 2 && is_leap(y)) return 29;
        return d[m - 1];
    }

    bool valid() const {
        return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
    }

    // Parses "YYYY-MM-DD"; rejects impossible dates.
    static Date parse(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
            throw SchemaError("bad date (want YYYY-MM-DD): " + std::string(s));
        }
        auto num = [&](std::size_t pos, std::size_t n) {
            int v = 0;
            for (std::size_t i = pos; i < pos + n; ++i) {
                if (s[i] < '0' || s[i] > '9') throw SchemaError("bad date: " + std::string(s));
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        Date d{num(0, 4), num(5, 2), num(8, 2)};
        if (!d.valid()) throw SchemaError("impossible date: " + std::string(s));
        return d;
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

struct Provenance {
    std::string doc_id;
    std::size_t start = 0;
    std::size_t end = 0;
    auto operator<=>(const Provenance&) const = default;
};

// One (subject, relation, object, time-span) assertion, the KB's atom.
// A single year y is the span [y, y]; an open range has an absent end.
struct TemporalFact {
    std::string subject;
    std::string relation;
    std::string object;
    std::optional<int> start_year;
    std::optional<int> end_year;
    std::vector<Provenance> provenance;

    TemporalFact() = default;
    TemporalFact(std::string subj, std::string rel, std::string obj,
                 std::optional<int> start = std::nullopt, std::optional<int> end = std::nullopt,
                 std::vector<Provenance> prov = {})
        : subject(std::move(subj)),
          relation(std::move(rel)),
          object(std::move(obj)),
          start_year(start),
          end_year(end),
          provenance(std::move(prov)) {
        if (normalize_key(subject).empty()) throw SchemaError("fact subject empty");
        if (normalize_key(relation).empty()) throw SchemaError("fact relation empty");
        if (start_year && end_year && *start_year > *end_year) {
            throw SchemaError("fact span inverted: " + std::to_string(*start_year) + ">" +
                              std::to_string(*end_year));
        }
    }

    bool span_contains(int y) const {
        if (start_year && y < *start_year) return false;
        if (end_year && y > *end_year) return false;
        return true;
    }

    bool operator==(const TemporalFact& o) const {
        return subject == o.subject && relation == o.relation && object == o.object &&
               start_year == o.start_year && end_year == o.end_year && provenance == o.provenance;
    }
};

inline constexpr const char* kQueryPlaceholder = "?";

// Structured form of a question: the object slot is always the placeholder.
struct QuestionQuadruple {
    std::string subject;
    std::string relation;
    std::string object = kQueryPlaceholder;
    std::optional<int> q_year;  // absent = all time

    QuestionQuadruple() = default;
    QuestionQuadruple(std::string subj, std::string rel, std::optional<int> year)
        : subject(std::move(subj)), relation(std::move(rel)), q_year(year) {
        if (subject.empty()) throw SchemaError("quadruple subject empty");
        if (relation.empty()) throw SchemaError("quadruple relation empty");
    }
};

struct GoldAnswer {
    std::string name;
    std::string wikidata_id;
    bool operator==(const GoldAnswer&) const = default;
};

enum class BundleMode { closest, latest, cumulative, unified };

inline const char* to_string(BundleMode m) {
    switch (m) {
        case BundleMode::closest: return "closest";
        case BundleMode::latest: return "latest";
        case BundleMode::cumulative: return "cumulative";
        case BundleMode::unified: return "unified";
    }
    return "?";
}

inline BundleMode bundle_mode_from_string(std::string_view s) {
    if (s == "closest") return BundleMode::closest;
    if (s == "latest") return BundleMode::latest;
    if (s == "cumulative") return BundleMode::cumulative;
    if (s == "unified") return BundleMode::unified;
    throw SchemaError("unknown snapshot mode: " + std::string(s));
}

// The context handed to a pipeline: dated reference texts plus metadata.
struct EvidenceBundle {
    BundleMode mode = BundleMode::closest;
    std::vector<std::pair<std::string, std::string>> texts;  // (year-or-timestamp, text)
    std::size_t total_chars = 0;                              // Unicode scalar values

    static EvidenceBundle make(BundleMode mode,
                               std::vector<std::pair<std::string, std::string>> texts) {
        if (texts.empty()) throw SchemaError("evidence bundle must contain at least one text");
        EvidenceBundle b;
        b.mode = mode;
        b.texts = std::move(texts);
        for (const auto& [ts, text] : b.texts) b.total_chars += utf8_length(text);
        return b;
    }

    // Rendered form placed in prompts: "[timestamp]\ntext" blocks.
    std::string rendered() const {
        std::string out;
        for (const auto& [ts, text] : texts) {
            if (!out.empty()) out += "\n\n";
            out += "[" + ts + "]\n" + text;
        }
        return out;
    }
};

}  // namespace tqa
