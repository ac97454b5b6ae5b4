#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/parallel.hpp"

namespace tsl {

/// Temporal intersection-over-union of two 1D intervals.
/// Union is the total covered length: dur(a) + dur(b) - intersection.
inline double tiou(const TimeInterval& a, const TimeInterval& b) noexcept {
    double inter = std::min(a.end(), b.end()) - std::max(a.start(), b.start());
    if (inter <= 0.0) return 0.0;
    return inter / (a.duration() + b.duration() - inter);
}

/// Strictly increasing tIoU thresholds, each in (0, 1].
class TiouThresholds {
public:
    explicit TiouThresholds(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            fail(ErrorCode::InvalidConfig, "threshold list must not be empty");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            double v = values_[i];
            if (!(v > 0.0 && v <= 1.0)) {
                fail(ErrorCode::InvalidConfig,
                     "threshold " + std::to_string(v) + " outside (0, 1]");
            }
            if (i > 0 && values_[i - 1] >= v) {
                fail(ErrorCode::InvalidConfig, "thresholds must be strictly increasing");
            }
        }
    }

    /// The conventional evaluation grid {0.1, 0.2, 0.3, 0.4, 0.5}.
    static TiouThresholds standard_grid() {
        std::vector<double> values;
        for (int i = 1; i <= 5; ++i) values.push_back(static_cast<double>(i) / 10.0);
        return TiouThresholds(std::move(values));
    }

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<double> values_;
};

/// One row of a matching result: which GT event (if any) the detection at
/// `detection_index` was assigned to. Rows appear in processing order
/// (descending score; ties by earlier start, then input order).
struct DetectionMatch {
    std::size_t detection_index;
    std::optional<std::size_t> gt_index;
};

namespace detail {

// Rank order used everywhere a detection list needs a deterministic ranking:
// higher score first, then earlier start, then original input order.
struct RankKey {
    double score;
    double start;
    std::size_t index;
};

inline bool rank_before(const RankKey& a, const RankKey& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.index < b.index;
}

inline std::vector<std::size_t> ranked_indices(const std::vector<Detection>& dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rank_before({dets[a].score(), dets[a].interval().start(), a},
                           {dets[b].score(), dets[b].interval().start(), b});
    });
    return order;
}

} // namespace detail

/// Greedy PASCAL-style matching of scored detections against ground truth for
/// one video. Detections are processed in rank order; each one takes the
/// unmatched same-class GT event with the highest tIoU, provided that tIoU
/// meets the threshold (equal tIoU resolved to the lowest GT index). Every GT
/// event is matched at most once.
inline std::vector<DetectionMatch> match_detections(const DetectionSet& dets,
                                                    const EventSet& gt,
                                                    double tiou_threshold) {
    if (dets.video_id != gt.video_id) {
        fail(ErrorCode::VideoIdMismatch,
             "detections for '" + dets.video_id + "' matched against ground truth for '" +
                 gt.video_id + "'");
    }
    if (!(tiou_threshold > 0.0 && tiou_threshold <= 1.0)) {
        fail(ErrorCode::InvalidConfig,
             "tIoU threshold " + std::to_string(tiou_threshold) + " outside (0, 1]");
    }

    std::vector<bool> gt_taken(gt.events.size(), false);
    std::vector<DetectionMatch> result;
    result.reserve(dets.detections.size());

    for (std::size_t det_idx : detail::ranked_indices(dets.detections)) {
        const Detection& det = dets.detections[det_idx];
        std::optional<std::size_t> best;
        double best_tiou = 0.0;
        for (std::size_t g = 0; g < gt.events.size(); ++g) {
            if (gt_taken[g] || gt.events[g].label() != det.label()) continue;
            double overlap = tiou(det.interval(), gt.events[g].interval());
            if (overlap > best_tiou) {
                best_tiou = overlap;
                best = g;
            }
        }
        if (best && best_tiou >= tiou_threshold) {
            gt_taken[*best] = true;
            result.push_back({det_idx, best});
        } else {
            result.push_back({det_idx, std::nullopt});
        }
    }
    return result;
}

namespace detail {

struct PooledDetection {
    double score;
    double start;
    std::size_t order; // position in the deterministic cross-video pool
    bool tp;
};

// Cross-video pools for one class: matched/unmatched flags for every
// detection, plus the class GT count. Videos are keyed by id so pool order is
// independent of input list order.
inline void check_video_alignment(const std::vector<DetectionSet>& preds,
                                  const std::vector<EventSet>& gts,
                                  std::map<std::string, const EventSet*>& gt_by_id,
                                  std::map<std::string, const DetectionSet*>& pred_by_id) {
    for (const EventSet& set : gts) {
        if (!gt_by_id.emplace(set.video_id, &set).second) {
            fail(ErrorCode::DuplicateVideoId,
                 "duplicate ground-truth video id '" + set.video_id + "'");
        }
    }
    for (const DetectionSet& set : preds) {
        if (!gt_by_id.count(set.video_id)) {
            fail(ErrorCode::UnknownVideoId,
                 "predictions for video '" + set.video_id + "' have no ground truth");
        }
        if (!pred_by_id.emplace(set.video_id, &set).second) {
            fail(ErrorCode::DuplicateVideoId,
                 "duplicate prediction video id '" + set.video_id + "'");
        }
    }
}

// Filters one video's sets down to a single class, keeping record order.
inline DetectionSet filter_class(const DetectionSet& set, int class_id) {
    DetectionSet out{set.video_id, {}};
    for (const Detection& d : set.detections) {
        if (d.label() == class_id) out.detections.push_back(d);
    }
    return out;
}

inline EventSet filter_class(const EventSet& set, int class_id) {
    EventSet out{set.video_id, {}, set.duration};
    for (const SoundEvent& e : set.events) {
        if (e.label() == class_id) out.events.push_back(e);
    }
    return out;
}

// All-points interpolated AP over a TP/FP sequence in rank order. The
// precision envelope at rank i is the max precision at any rank >= i; each
// true positive contributes envelope_precision / n_gt of area.
inline double envelope_ap(std::vector<PooledDetection> pool, std::size_t n_gt) {
    std::sort(pool.begin(), pool.end(), [](const PooledDetection& a, const PooledDetection& b) {
        return rank_before({a.score, a.start, a.order}, {b.score, b.start, b.order});
    });
    std::vector<double> precision(pool.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].tp) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = pool.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].tp) ap += precision[i];
    }
    return ap / static_cast<double>(n_gt);
}

// Matches one class across videos and pools the TP/FP outcomes. Pool order is
// videos sorted by id, then detection record order within the video.
inline double class_ap(const std::map<std::string, const EventSet*>& gt_by_id,
                       const std::map<std::string, const DetectionSet*>& pred_by_id,
                       int class_id, double threshold, std::size_t n_gt) {
    std::vector<PooledDetection> pool;
    std::size_t order = 0;
    for (const auto& [video_id, gt_set] : gt_by_id) {
        EventSet gt_class = filter_class(*gt_set, class_id);
        auto pred_it = pred_by_id.find(video_id);
        if (pred_it == pred_by_id.end()) continue;
        DetectionSet det_class = filter_class(*pred_it->second, class_id);

        std::vector<bool> matched(det_class.detections.size(), false);
        for (const DetectionMatch& m : match_detections(det_class, gt_class, threshold)) {
            if (m.gt_index) matched[m.detection_index] = true;
        }
        for (std::size_t i = 0; i < det_class.detections.size(); ++i) {
            pool.push_back({det_class.detections[i].score(),
                            det_class.detections[i].interval().start(), order++, matched[i]});
        }
    }
    return envelope_ap(std::move(pool), n_gt);
}

} // namespace detail

/// Average precision for one class at one tIoU threshold, pooled across
/// videos. Requires at least one GT instance of the class.
inline double average_precision(const std::vector<DetectionSet>& preds,
                                const std::vector<EventSet>& gts, int class_id,
                                double tiou_threshold) {
    std::map<std::string, const EventSet*> gt_by_id;
    std::map<std::string, const DetectionSet*> pred_by_id;
    detail::check_video_alignment(preds, gts, gt_by_id, pred_by_id);

    std::size_t n_gt = 0;
    for (const EventSet& set : gts) {
        for (const SoundEvent& e : set.events) {
            if (e.label() == class_id) ++n_gt;
        }
    }
    if (n_gt == 0) {
        fail(ErrorCode::NoGroundTruth,
             "class " + std::to_string(class_id) + " has no ground-truth instances");
    }
    return detail::class_ap(gt_by_id, pred_by_id, class_id, tiou_threshold, n_gt);
}

/// Per-class GT and detection tallies reported alongside AP values.
struct ClassCounts {
    std::size_t ground_truth = 0;
    std::size_t detections = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Full evaluation result: AP per (class, threshold), mAP per threshold, and
/// the overall mean. Classes without GT instances carry no AP value; they are
/// excluded from the class mean but still appear in `counts`.
struct EvalReport {
    std::vector<double> thresholds;
    std::vector<std::vector<std::optional<double>>> per_class_ap; // [class][threshold]
    std::vector<double> per_threshold_map;
    double overall_map = 0.0;
    std::vector<ClassCounts> counts;
};

/// Evaluates predictions against ground truth over a threshold grid.
/// mAP at each threshold is the mean AP over classes with at least one GT
/// instance; the overall mAP is the mean over thresholds. Results are
/// identical for any `jobs` value.
inline EvalReport evaluate(const std::vector<DetectionSet>& preds,
                           const std::vector<EventSet>& gts, const Vocabulary& vocabulary,
                           const TiouThresholds& thresholds, int jobs = 1) {
    std::map<std::string, const EventSet*> gt_by_id;
    std::map<std::string, const DetectionSet*> pred_by_id;
    detail::check_video_alignment(preds, gts, gt_by_id, pred_by_id);
    for (const EventSet& set : gts) validate_event_set(set, vocabulary);
    for (const DetectionSet& set : preds) validate_detection_set(set, vocabulary);

    const std::size_t n_classes = vocabulary.size();
    const std::size_t n_thresholds = thresholds.size();

    EvalReport report;
    report.thresholds = thresholds.values();
    report.counts.assign(n_classes, ClassCounts{});
    report.per_class_ap.assign(n_classes,
                               std::vector<std::optional<double>>(n_thresholds, std::nullopt));

    for (const EventSet& set : gts) {
        for (const SoundEvent& e : set.events) {
            ++report.counts[static_cast<std::size_t>(e.label())].ground_truth;
        }
    }
    for (const DetectionSet& set : preds) {
        for (const Detection& d : set.detections) {
            ++report.counts[static_cast<std::size_t>(d.label())].detections;
        }
    }

    std::size_t total_gt = 0;
    for (const ClassCounts& c : report.counts) total_gt += c.ground_truth;
    if (total_gt == 0) {
        fail(ErrorCode::EmptyGroundTruth, "ground truth contains no events");
    }

    // One independent work item per (class, threshold) cell.
    detail::parallel_for(n_classes * n_thresholds, jobs, [&](std::size_t cell) {
        std::size_t class_id = cell / n_thresholds;
        std::size_t t = cell % n_thresholds;
        std::size_t n_gt = report.counts[class_id].ground_truth;
        if (n_gt == 0) return;
        report.per_class_ap[class_id][t] = detail::class_ap(
            gt_by_id, pred_by_id, static_cast<int>(class_id), thresholds.values()[t], n_gt);
    });

    report.per_threshold_map.assign(n_thresholds, 0.0);
    for (std::size_t t = 0; t < n_thresholds; ++t) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (report.per_class_ap[c][t]) {
                sum += *report.per_class_ap[c][t];
                ++n;
            }
        }
        report.per_threshold_map[t] = sum / static_cast<double>(n);
    }
    double sum = 0.0;
    for (double v : report.per_threshold_map) sum += v;
    report.overall_map = sum / static_cast<double>(n_thresholds);
    return report;
}

} // namespace tsl
