#pragma once
// Regex-based document cleaning: structured-knowledge removal and
// character standardization. The pattern set is versioned data, not
// code, so runs can pin and audit the exact rules applied.

#include <cctype>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tqa/text.hpp"

namespace tqa {

struct CleanReport {
    long removed_structured_blocks = 0;  // table blocks + list lines
    long removed_artifact_count = 0;     // links, tags, escapes, entities, urls
    std::size_t input_chars = 0;
    std::size_t output_chars = 0;

    CleanReport& operator+=(const CleanReport& o) {
        removed_structured_blocks += o.removed_structured_blocks;
        removed_artifact_count += o.removed_artifact_count;
        input_chars += o.input_chars;
        output_chars += o.output_chars;
        return *this;
    }
};

// Named regex rules, applied in order by standardize_characters.
struct PatternTable {
    std::string version = "patterns-v1";
    std::vector<std::pair<std::string, std::string>> rules;

    static PatternTable defaults() {
        PatternTable t;
        t.rules = {
            {"ref_tag", R"(<ref[^>/]*/>|<ref[^>]*>[\s\S]*?</ref>)"},
            {"html_tag", R"(<[A-Za-z/!][^>]*>)"},
            {"wiki_link_labeled", R"(\[\[[^\[\]\|]*\|([^\[\]]*)\]\])"},
            {"wiki_link_plain", R"(\[\[([^\[\]\|]*)\]\])"},
            {"ext_link_labeled", R"(\[(?:https?|ftp)://[^\s\]]+[ \t]+([^\]]*)\])"},
            {"ext_link_bare", R"(\[(?:https?|ftp)://[^\s\]]+\])"},
            {"bare_url", R"((?:https?|ftp)://[^\s]+)"},
        };
        return t;
    }

    // File format: one "name = pattern" per line; '#' comments; a line
    // "version = <tag>" sets the version.
    static PatternTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open pattern table: " + path);
        PatternTable t;
        t.rules.clear();
        std::string line;
        while (std::getline(in, line)) {
            std::string s = trim(line);
            if (s.empty() || s[0] == '#') continue;
            auto eq = s.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("pattern table: bad line '" + line + "'");
            }
            std::string name = trim(s.substr(0, eq));
            std::string pattern = trim(s.substr(eq + 1));
            if (name == "version") {
                t.version = pattern;
            } else {
                std::regex probe(pattern);  // validate eagerly
                t.rules.emplace_back(name, pattern);
            }
        }
        return t;
    }
};

namespace detail {

inline bool starts_with_marker(const std::string& line, const char* marker) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return line.compare(i, std::strlen(marker), marker) == 0;
}

inline bool is_list_line(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) return false;
    char c = line[i];
    if (c == '*' || c == '#' || c == '-') return true;
    return line.compare(i, 3, "\xE2\x80\xA2") == 0;  // •
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace detail

// Removes wiki table blocks ({| ... |}) and bullet/numbered list lines.
// Everything else is preserved in order. Idempotent.
inline std::pair<std::string, CleanReport> strip_structured(const std::string& text) {
    CleanReport report;
    report.input_chars = utf8_length(text);
    std::vector<std::string> kept;
    bool in_table = false;
    for (const auto& line : detail::split_lines(text)) {
        if (in_table) {
            if (detail::starts_with_marker(line, "|}")) {
                in_table = false;
                ++report.removed_structured_blocks;
            }
            continue;
        }
        if (detail::starts_with_marker(line, "{|")) {
            in_table = true;
            continue;
        }
        if (detail::is_list_line(line)) {
            ++report.removed_structured_blocks;
            continue;
        }
        kept.push_back(line);
    }
    if (in_table) ++report.removed_structured_blocks;  // unterminated block runs to EOF
    std::string out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i) out += '\n';
        out += kept[i];
    }
    report.output_chars = utf8_length(out);
    return {std::move(out), report};
}

namespace detail {

// Decodes \uXXXX, \n, \t, \r, \" escape sequences. Lone backslashes pass
// through untouched.
inline std::string decode_escapes(const std::string& text, long& count) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '\\' && i + 1 < text.size()) {
            char c = text[i + 1];
            if (c == 'u' && i + 5 < text.size()) {
                bool hex = true;
                unsigned cp = 0;
                for (std::size_t k = i + 2; k < i + 6; ++k) {
                    char h = text[k];
                    int v = (h >= '0' && h <= '9')   ? h - '0'
                            : (h >= 'a' && h <= 'f') ? h - 'a' + 10
                            : (h >= 'A' && h <= 'F') ? h - 'A' + 10
                                                     : -1;
                    if (v < 0) { hex = false; break; }
                    cp = cp * 16 + static_cast<unsigned>(v);
                }
                if (hex && !(cp >= 0xD800 && cp <= 0xDFFF)) {
                    utf8_append(out, cp);
                    ++count;
                    i += 6;
                    continue;
                }
            } else if (c == 'n') {
                out += '\n'; ++count; i += 2; continue;
            } else if (c == 't') {
                out += ' '; ++count; i += 2; continue;
            } else if (c == 'r') {
                ++count; i += 2; continue;
            } else if (c == '"') {
                out += '"'; ++count; i += 2; continue;
            }
        }
        out += text[i++];
    }
    return out;
}

// Decodes HTML entities to a fixpoint so the result carries none.
inline std::string decode_entities(const std::string& text, long& count) {
    static const std::pair<const char*, const char*> named[] = {
        {"&lt;", "<"},   {"&gt;", ">"},    {"&quot;", "\""}, {"&apos;", "'"},
        {"&#39;", "'"},  {"&nbsp;", " "},  {"&ndash;", "\xE2\x80\x93"},
        {"&mdash;", "\xE2\x80\x94"}, {"&amp;", "&"},
    };
    std::string cur = text;
    for (int round = 0; round < 4; ++round) {
        std::string out;
        out.reserve(cur.size());
        bool changed = false;
        std::size_t i = 0;
        while (i < cur.size()) {
            if (cur[i] == '&') {
                bool matched = false;
                for (const auto& [ent, rep] : named) {
                    std::size_t n = std::strlen(ent);
                    if (cur.compare(i, n, ent) == 0) {
                        out += rep;
                        i += n;
                        ++count;
                        matched = changed = true;
                        break;
                    }
                }
                if (matched) continue;
                if (cur.compare(i, 2, "&#") == 0) {
                    std::size_t j = i + 2;
                    unsigned cp = 0;
                    while (j < cur.size() && std::isdigit(static_cast<unsigned char>(cur[j]))) {
                        cp = cp * 10 + static_cast<unsigned>(cur[j] - '0');
                        ++j;
                    }
                    if (j < cur.size() && cur[j] == ';' && j > i + 2 && cp > 0 && cp <= 0x10FFFF) {
                        utf8_append(out, cp);
                        i = j + 1;
                        ++count;
                        changed = true;
                        continue;
                    }
                }
            }
            out += cur[i++];
        }
        cur = std::move(out);
        if (!changed) break;
    }
    return cur;
}

// Collapses space/tab runs, trims line ends, squeezes blank-line runs
// to a single blank line, trims the whole text.
inline std::string normalize_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    int pending_newlines = 0;
    bool pending_space = false;
    bool line_has_content = false;
    for (char ch : text) {
        if (ch == '\r') continue;
        if (ch == '\n') {
            if (line_has_content) pending_newlines = 1;
            else if (pending_newlines >= 1) pending_newlines = 2;
            pending_space = false;
            line_has_content = false;
            continue;
        }
        if (ch == ' ' || ch == '\t') {
            pending_space = line_has_content;
            continue;
        }
        if (pending_newlines && !out.empty()) out.append(static_cast<std::size_t>(pending_newlines), '\n');
        pending_newlines = 0;
        if (pending_space) out += ' ';
        pending_space = false;
        line_has_content = true;
        out += ch;
    }
    return out;
}

}  // namespace detail

// Rewrites wiki links to their labels, strips tags/URLs, decodes escape
// sequences and entities, and normalizes whitespace. Idempotent.
inline std::pair<std::string, CleanReport> standardize_characters(
    const std::string& text, const PatternTable& table = PatternTable::defaults()) {
    CleanReport report;
    report.input_chars = utf8_length(text);

    std::string cur = detail::decode_escapes(text, report.removed_artifact_count);
    cur = detail::decode_entities(cur, report.removed_artifact_count);

    for (const auto& [name, pattern] : table.rules) {
        std::regex re(pattern);
        std::string replaced;
        auto begin = std::sregex_iterator(cur.begin(), cur.end(), re);
        auto end = std::sregex_iterator();
        std::size_t last = 0;
        for (auto it = begin; it != end; ++it) {
            const std::smatch& m = *it;
            replaced.append(cur, last, static_cast<std::size_t>(m.position()) - last);
            // Rules with a capture group keep the captured label; others delete.
            if (m.size() > 1 && m[1].matched) replaced.append(m[1].str());
            last = static_cast<std::size_t>(m.position() + m.length());
            ++report.removed_artifact_count;
        }
        replaced.append(cur, last, cur.size() - last);
        cur = std::move(replaced);
    }

    cur = detail::normalize_whitespace(cur);
    report.output_chars = utf8_length(cur);
    return {std::move(cur), report};
}

// Full cleaning pass: structure removal, then character standardization.
inline std::pair<std::string, CleanReport> clean_document(
    const std::string& text, const PatternTable& table = PatternTable::defaults()) {
    auto [stripped, r1] = strip_structured(text);
    auto [standardized, r2] = standardize_characters(stripped, table);
    CleanReport report;
    report.removed_structured_blocks = r1.removed_structured_blocks;
    report.removed_artifact_count = r2.removed_artifact_count;
    report.input_chars = r1.input_chars;
    report.output_chars = r2.output_chars;
    return {std::move(standardized), report};
}

}  // namespace tqa
