#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tsl/errors.hpp"

namespace tsl {

/// Half-open [start, end) span in seconds on a video timeline.
/// Invariants enforced at construction: both bounds finite, start >= 0,
/// end > start (zero-duration spans are rejected).
class TimeInterval {
public:
    TimeInterval(double start_s, double end_s) : start_(start_s), end_(end_s) {
        if (!valid(start_s, end_s)) {
            fail(ErrorCode::InvalidInterval,
                 "invalid interval [" + std::to_string(start_s) + ", " +
                     std::to_string(end_s) +
                     "): bounds must be finite, start >= 0, end > start");
        }
    }

    static bool valid(double start_s, double end_s) noexcept {
        return std::isfinite(start_s) && std::isfinite(end_s) &&
               start_s >= 0.0 && end_s > start_s;
    }

    double start() const noexcept { return start_; }
    double end() const noexcept { return end_; }
    double duration() const noexcept { return end_ - start_; }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;

private:
    double start_;
    double end_;
};

/// Ordered list of class names. Entries must be unique and non-empty;
/// a class label id is an index into this list.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty()) {
                fail(ErrorCode::InvalidVocabulary,
                     "vocabulary entry " + std::to_string(i) + " is empty");
            }
            auto [it, inserted] = index_.emplace(names_[i], static_cast<int>(i));
            if (!inserted) {
                fail(ErrorCode::InvalidVocabulary,
                     "duplicate vocabulary entry '" + names_[i] + "'");
            }
        }
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    const std::string& name(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
            fail(ErrorCode::LabelOutOfRange,
                 "label id " + std::to_string(id) + " out of range (vocabulary size " +
                     std::to_string(names_.size()) + ")");
        }
        return names_[static_cast<std::size_t>(id)];
    }

    std::optional<int> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(int id) const noexcept {
        return id >= 0 && static_cast<std::size_t>(id) < names_.size();
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.names_ == b.names_;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

/// A labelled interval: one sound event on a video timeline.
/// The label is a non-negative class index; whether it fits a particular
/// vocabulary is checked at set level (validate_event_set) where the
/// vocabulary is known.
class SoundEvent {
public:
    SoundEvent(TimeInterval interval, int label) : interval_(interval), label_(label) {
        if (label < 0) {
            fail(ErrorCode::LabelOutOfRange,
                 "label id must be non-negative, got " + std::to_string(label));
        }
    }

    const TimeInterval& interval() const noexcept { return interval_; }
    int label() const noexcept { return label_; }

    friend bool operator==(const SoundEvent&, const SoundEvent&) = default;

private:
    TimeInterval interval_;
    int label_;
};

/// A scored sound-event candidate emitted by a localizer.
/// Scores outside [0, 1] are rejected, not clamped.
class Detection {
public:
    Detection(SoundEvent event, double score) : event_(std::move(event)), score_(score) {
        if (!(std::isfinite(score) && score >= 0.0 && score <= 1.0)) {
            fail(ErrorCode::InvalidScore,
                 "detection score must be in [0, 1], got " + std::to_string(score));
        }
    }

    const SoundEvent& event() const noexcept { return event_; }
    const TimeInterval& interval() const noexcept { return event_.interval(); }
    int label() const noexcept { return event_.label(); }
    double score() const noexcept { return score_; }

    friend bool operator==(const Detection&, const Detection&) = default;

private:
    SoundEvent event_;
    double score_;
};

/// Ground-truth events for one video. `duration`, when present, caps every
/// event's end time.
struct EventSet {
    std::string video_id;
    std::vector<SoundEvent> events;
    std::optional<double> duration;

    friend bool operator==(const EventSet&, const EventSet&) = default;
};

/// Scored predictions for one video; the prediction-side mirror of EventSet.
struct DetectionSet {
    std::string video_id;
    std::vector<Detection> detections;

    friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

/// Checks every EventSet invariant against the given vocabulary and returns
/// the set unchanged. Throws the first violation found, naming the offending
/// event index. Idempotent by construction.
inline const EventSet& validate_event_set(const EventSet& set, const Vocabulary& vocabulary) {
    if (set.duration && !(std::isfinite(*set.duration) && *set.duration > 0.0)) {
        fail(ErrorCode::InvalidConfig,
             "video '" + set.video_id + "': duration must be positive and finite");
    }
    for (std::size_t i = 0; i < set.events.size(); ++i) {
        const SoundEvent& ev = set.events[i];
        if (!TimeInterval::valid(ev.interval().start(), ev.interval().end())) {
            fail(ErrorCode::InvalidInterval,
                 "video '" + set.video_id + "' event " + std::to_string(i) +
                     ": invalid interval");
        }
        if (!vocabulary.contains(ev.label())) {
            fail(ErrorCode::LabelOutOfRange,
                 "video '" + set.video_id + "' event " + std::to_string(i) + ": label " +
                     std::to_string(ev.label()) + " out of range (vocabulary size " +
                     std::to_string(vocabulary.size()) + ")");
        }
        if (set.duration && ev.interval().end() > *set.duration) {
            fail(ErrorCode::EventExceedsDuration,
                 "video '" + set.video_id + "' event " + std::to_string(i) +
                     ": end " + std::to_string(ev.interval().end()) +
                     " exceeds video duration " + std::to_string(*set.duration));
        }
    }
    return set;
}

/// Prediction-side mirror of validate_event_set: label-range check per
/// detection (interval and score invariants already hold by construction).
inline const DetectionSet& validate_detection_set(const DetectionSet& set,
                                                  const Vocabulary& vocabulary) {
    for (std::size_t i = 0; i < set.detections.size(); ++i) {
        const Detection& det = set.detections[i];
        if (!vocabulary.contains(det.label())) {
            fail(ErrorCode::LabelOutOfRange,
                 "video '" + set.video_id + "' detection " + std::to_string(i) +
                     ": label " + std::to_string(det.label()) +
                     " out of range (vocabulary size " + std::to_string(vocabulary.size()) +
                     ")");
        }
    }
    return set;
}

} // namespace tsl
