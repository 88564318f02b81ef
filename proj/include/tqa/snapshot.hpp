#pragma once
// Evidence construction over an entity's dated snapshot timeline:
// closest / latest / cumulative selection.

#include <optional>
#include <string>
#include <vector>

#include "tqa/core.hpp"

namespace tqa {

struct Snapshot {
    Date capture_date;
    std::string text;
};

class NoFollowingSnapshot : public std::runtime_error {
public:
    NoFollowingSnapshot(int q_year, Date latest_available)
        : std::runtime_error("no snapshot after year " + std::to_string(q_year) +
                             " (latest available: " + latest_available.to_string() + ")"),
          q_year(q_year),
          latest_available(latest_available) {}
    int q_year;
    Date latest_available;
};

// Strictly ascending capture dates; duplicates rejected at construction.
class SnapshotTimeline {
public:
    SnapshotTimeline(std::string entity, std::vector<Snapshot> snapshots)
        : entity_(std::move(entity)), snapshots_(std::move(snapshots)) {
        if (snapshots_.empty()) throw SchemaError("timeline must contain at least one snapshot");
        for (std::size_t i = 0; i < snapshots_.size(); ++i) {
            if (snapshots_[i].text.empty()) throw SchemaError("timeline snapshot text empty");
            if (!snapshots_[i].capture_date.valid()) throw SchemaError("invalid capture date");
            if (i > 0 && !(snapshots_[i - 1].capture_date < snapshots_[i].capture_date)) {
                throw SchemaError("timeline capture dates must be strictly ascending (" +
                                  snapshots_[i - 1].capture_date.to_string() + " !< " +
                                  snapshots_[i].capture_date.to_string() + ")");
            }
        }
    }

    const std::string& entity() const { return entity_; }
    const std::vector<Snapshot>& snapshots() const { return snapshots_; }

private:
    std::string entity_;
    std::vector<Snapshot> snapshots_;
};

// Earliest snapshot in year q_year+1, else earliest snapshot strictly
// after December 31 of q_year. Returns the snapshot and its map_year.
inline std::pair<Snapshot, int> select_closest(const SnapshotTimeline& timeline, int q_year) {
    const Snapshot* in_next_year = nullptr;
    const Snapshot* after = nullptr;
    for (const auto& s : timeline.snapshots()) {  // ascending, first hit wins
        if (s.capture_date.year == q_year + 1 && !in_next_year) in_next_year = &s;
        if (s.capture_date.year > q_year && !after) after = &s;
    }
    const Snapshot* chosen = in_next_year ? in_next_year : after;
    if (!chosen) {
        throw NoFollowingSnapshot(q_year, timeline.snapshots().back().capture_date);
    }
    return {*chosen, chosen->capture_date.year};
}

inline Snapshot select_latest(const SnapshotTimeline& timeline) {
    return timeline.snapshots().back();  // dates strictly ascending
}

// All snapshots up to and including the closest anchor, ascending, each
// prefixed by its capture-year header.
inline EvidenceBundle select_cumulative(const SnapshotTimeline& timeline, int q_year) {
    auto [anchor, map_year] = select_closest(timeline, q_year);
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& s : timeline.snapshots()) {
        if (s.capture_date <= anchor.capture_date) {
            texts.emplace_back(std::to_string(s.capture_date.year), s.text);
        }
    }
    return EvidenceBundle::make(BundleMode::cumulative, std::move(texts));
}

inline EvidenceBundle closest_bundle(const SnapshotTimeline& timeline, int q_year) {
    auto [snap, map_year] = select_closest(timeline, q_year);
    return EvidenceBundle::make(BundleMode::closest,
                                {{std::to_string(snap.capture_date.year), snap.text}});
}

inline EvidenceBundle latest_bundle(const SnapshotTimeline& timeline) {
    Snapshot snap = select_latest(timeline);
    return EvidenceBundle::make(BundleMode::latest,
                                {{std::to_string(snap.capture_date.year), snap.text}});
}

}  // namespace tqa
