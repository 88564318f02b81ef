#pragma once
// Recursive character text splitter. Splits on a fixed separator
// hierarchy (paragraph break, newline, sentence end, space, hard cut),
// greedily merges pieces up to chunk_size, and carries a tail of up to
// `overlap` characters into the next chunk. All offsets and sizes are
// in Unicode scalar values.

#include <string>
#include <vector>

#include "tqa/core.hpp"
#include "tqa/text.hpp"

namespace tqa {

struct RetrievalConfig {
    std::size_t chunk_size = 500;
    std::size_t overlap = 50;
    std::size_t top_k = 12;
    std::size_t dim = 512;

    void validate() const {
        if (chunk_size == 0) throw SchemaError("chunk_size must be positive");
        if (overlap >= chunk_size) throw SchemaError("overlap must be < chunk_size");
        if (top_k == 0) throw SchemaError("top_k must be >= 1");
        if (dim == 0) throw SchemaError("dim must be >= 1");
    }
};

struct Chunk {
    std::string doc_id;
    std::size_t start = 0;  // character offsets into the source document
    std::size_t end = 0;
    std::string text;
};

namespace detail {

using Span = std::pair<std::size_t, std::size_t>;  // [start, end) in code points

inline const std::vector<std::u32string>& chunk_separators() {
    static const std::vector<std::u32string> seps = {U"\n\n", U"\n", U". ", U" ", U""};
    return seps;
}

// Splits [start, end) on `sep`, separator kept attached to the piece it
// terminates, so pieces tile the range exactly.
inline std::vector<Span> split_on(const std::u32string& text, Span range,
                                  const std::u32string& sep) {
    std::vector<Span> pieces;
    std::size_t pos = range.first;
    while (pos < range.second) {
        std::size_t hit = text.find(sep, pos);
        if (sep.empty() || hit == std::u32string::npos || hit + sep.size() > range.second) {
            pieces.push_back({pos, range.second});
            break;
        }
        pieces.push_back({pos, hit + sep.size()});
        pos = hit + sep.size();
    }
    return pieces;
}

class RecursiveSplitter {
public:
    RecursiveSplitter(const std::u32string& text, const RetrievalConfig& cfg)
        : text_(text), cfg_(cfg) {}

    std::vector<Span> run() {
        split({0, text_.size()}, 0);
        flush();
        return std::move(out_);
    }

private:
    void split(Span range, std::size_t level) {
        if (range.second - range.first <= cfg_.chunk_size) {
            add_piece(range);
            return;
        }
        const auto& seps = chunk_separators();
        if (level >= seps.size() - 1) {
            hard_split(range);
            return;
        }
        std::vector<Span> pieces = split_on(text_, range, seps[level]);
        if (pieces.size() == 1) {
            split(range, level + 1);
            return;
        }
        for (const Span& p : pieces) {
            if (p.second - p.first > cfg_.chunk_size) {
                flush();  // no overlap carried across a recursion boundary
                split(p, level + 1);
            } else {
                add_piece(p);
            }
        }
    }

    // Fixed-size cut at the finest level. Pieces are overlap-sized so
    // the merge's tail retention can still produce overlapping chunks.
    void hard_split(Span range) {
        std::size_t piece_len = cfg_.overlap > 0 ? cfg_.overlap : cfg_.chunk_size;
        for (std::size_t pos = range.first; pos < range.second; pos += piece_len) {
            add_piece({pos, std::min(pos + piece_len, range.second)});
        }
    }

    // Greedy merge with tail retention: when the window would exceed
    // chunk_size, emit it and keep at most `overlap` trailing characters
    // as the prefix of the next chunk.
    void add_piece(Span p) {
        std::size_t len = p.second - p.first;
        if (len == 0) return;
        if (!window_.empty() && window_len_ + len > cfg_.chunk_size) {
            if (!emitted_from_window_) emit_window();
            while (!window_.empty() &&
                   (window_len_ > cfg_.overlap || window_len_ + len > cfg_.chunk_size)) {
                drop_front();
            }
        }
        window_.push_back(p);
        window_len_ += len;
        emitted_from_window_ = false;
    }

    void emit_window() {
        if (window_.empty()) return;
        out_.push_back({window_.front().first, window_.back().second});
        emitted_from_window_ = true;
    }

    void drop_front() {
        window_len_ -= window_.front().second - window_.front().first;
        window_.erase(window_.begin());
    }

    void flush() {
        if (!window_.empty() && !emitted_from_window_) emit_window();
        window_.clear();
        window_len_ = 0;
        emitted_from_window_ = false;
    }

    const std::u32string& text_;
    RetrievalConfig cfg_;
    std::vector<Span> window_;
    std::size_t window_len_ = 0;
    bool emitted_from_window_ = false;
    std::vector<Span> out_;
};

}  // namespace detail

inline std::vector<Chunk> split_recursive(const std::string& text, const RetrievalConfig& cfg,
                                          const std::string& doc_id = "doc") {
    cfg.validate();
    if (text.empty()) return {};
    std::u32string cps = utf8_decode(text);
    detail::RecursiveSplitter splitter(cps, cfg);
    std::vector<detail::Span> spans = splitter.run();
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    for (const auto& [s, e] : spans) {
        chunks.push_back({doc_id, s, e, utf8_encode(cps.substr(s, e - s))});
    }
    return chunks;
}

// Concatenation of chunks with each one's overlap prefix removed; equal
// to the source text when chunks come from split_recursive on it.
inline std::string deoverlap_concat(const std::vector<Chunk>& chunks) {
    std::string out;
    std::size_t covered = 0;
    for (const auto& c : chunks) {
        std::u32string cps = utf8_decode(c.text);
        std::size_t skip = covered > c.start ? covered - c.start : 0;
        if (skip < cps.size()) out += utf8_encode(cps.substr(skip));
        if (c.end > covered) covered = c.end;
    }
    return out;
}

}  // namespace tqa
