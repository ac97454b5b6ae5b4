#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/metrics.hpp"
#include "tsl/parallel.hpp"

namespace tsl {

/// How a fused score is adjusted for the number of member detections N in a
/// cluster, relative to the model count T:
///   none             -> unchanged
///   by_count         -> s * N / T (then clamped into [0, 1])
///   by_count_clamped -> s * min(N, T) / T
enum class RescaleMode { none, by_count, by_count_clamped };

inline const char* rescale_mode_name(RescaleMode mode) noexcept {
    switch (mode) {
    case RescaleMode::none: return "none";
    case RescaleMode::by_count: return "by_count";
    case RescaleMode::by_count_clamped: return "by_count_clamped";
    }
    return "unknown";
}

/// Configuration for interval WBF. An empty weight list means equal weight
/// 1.0 for every model; otherwise the list length must match the number of
/// input models.
struct FusionConfig {
    std::vector<double> weights;
    double cluster_tiou = 0.55;
    RescaleMode rescale_mode = RescaleMode::by_count_clamped;
    double score_floor = 0.0;
};

/// A fused cluster: the member detections (tagged with their source model)
/// and the confidence-weighted fused detection, before score rescaling.
struct ClusterMember {
    std::size_t model_index;
    Detection detection;
};

struct Cluster {
    std::vector<ClusterMember> members;
    Detection fused;
};

namespace detail {

inline std::vector<double> resolve_weights(const FusionConfig& config, std::size_t n_models) {
    if (config.weights.empty()) {
        return std::vector<double>(n_models, 1.0);
    }
    if (config.weights.size() != n_models) {
        fail(ErrorCode::WeightCountMismatch,
             std::to_string(config.weights.size()) + " weights for " +
                 std::to_string(n_models) + " models");
    }
    for (double w : config.weights) {
        if (!(std::isfinite(w) && w > 0.0)) {
            fail(ErrorCode::InvalidConfig, "fusion weights must be positive and finite");
        }
    }
    return config.weights;
}

inline void validate_fusion_config(const FusionConfig& config) {
    if (!(config.cluster_tiou > 0.0 && config.cluster_tiou < 1.0)) {
        fail(ErrorCode::InvalidConfig,
             "cluster_tiou " + std::to_string(config.cluster_tiou) + " outside (0, 1)");
    }
    if (!(std::isfinite(config.score_floor) && config.score_floor >= 0.0 &&
          config.score_floor < 1.0)) {
        fail(ErrorCode::InvalidConfig,
             "score_floor " + std::to_string(config.score_floor) + " outside [0, 1)");
    }
}

// Accumulated sums for one cluster. The running fused interval is the
// weighted average of member endpoints with per-member weight w_model * score.
// Weighted means are accumulated as offsets from the first member, so a
// singleton cluster and a cluster of identical members reproduce their input
// bit-exactly (every offset term is zero) and the general case avoids
// large-magnitude cancellation.
struct ClusterState {
    int label = 0;
    double weight_sum = 0.0;        // sum of w_model over members
    double score_weight_sum = 0.0;  // sum of w_model * score
    double delta_start_sum = 0.0;   // sum of w_model * score * (start - ref start)
    double delta_end_sum = 0.0;
    double plain_delta_start_sum = 0.0;  // unweighted fallback when all scores are 0
    double plain_delta_end_sum = 0.0;
    double delta_score_sum = 0.0;   // sum of w_model * (score - ref score)
    double hull_start = 0.0;        // min member start
    double hull_end = 0.0;          // max member end
    std::vector<ClusterMember> members;

    TimeInterval fused_interval() const {
        const TimeInterval& ref = members[0].detection.interval();
        double start, end;
        if (score_weight_sum > 0.0) {
            start = ref.start() + delta_start_sum / score_weight_sum;
            end = ref.end() + delta_end_sum / score_weight_sum;
        } else {
            // All member scores are exactly 0; fall back to the unweighted mean.
            double n = static_cast<double>(members.size());
            start = ref.start() + plain_delta_start_sum / n;
            end = ref.end() + plain_delta_end_sum / n;
        }
        // The true means lie inside the member hull; clamp away any rounding
        // spill so the cluster invariant holds exactly.
        return {std::clamp(start, hull_start, hull_end),
                std::clamp(end, hull_start, hull_end)};
    }

    double fused_score() const {
        return members[0].detection.score() + delta_score_sum / weight_sum;
    }

    void add(std::size_t model_index, const Detection& det, double model_weight) {
        const Detection& ref = members.empty() ? det : members[0].detection;
        if (members.empty()) {
            hull_start = det.interval().start();
            hull_end = det.interval().end();
        } else {
            hull_start = std::min(hull_start, det.interval().start());
            hull_end = std::max(hull_end, det.interval().end());
        }
        double w = model_weight * det.score();
        weight_sum += model_weight;
        score_weight_sum += w;
        delta_start_sum += w * (det.interval().start() - ref.interval().start());
        delta_end_sum += w * (det.interval().end() - ref.interval().end());
        plain_delta_start_sum += det.interval().start() - ref.interval().start();
        plain_delta_end_sum += det.interval().end() - ref.interval().end();
        delta_score_sum += model_weight * (det.score() - ref.score());
        members.push_back({model_index, det});
    }
};

struct TaggedDetection {
    std::size_t model_index;
    std::size_t det_index;
    const Detection* det;
};

// Processing order across models: score desc, then earlier start, then end,
// then model index, then record index. With equal weights the model-index
// component only orders fully identical intervals, whose cluster outcome is
// order-independent, so the fused set is invariant under model permutation.
inline bool process_before(const TaggedDetection& a, const TaggedDetection& b) {
    if (a.det->score() != b.det->score()) return a.det->score() > b.det->score();
    if (a.det->interval().start() != b.det->interval().start()) {
        return a.det->interval().start() < b.det->interval().start();
    }
    if (a.det->interval().end() != b.det->interval().end()) {
        return a.det->interval().end() < b.det->interval().end();
    }
    if (a.model_index != b.model_index) return a.model_index < b.model_index;
    return a.det_index < b.det_index;
}

// Deterministic output order for fused detection lists.
inline bool output_before(const Detection& a, const Detection& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    if (a.interval().start() != b.interval().start()) {
        return a.interval().start() < b.interval().start();
    }
    if (a.interval().end() != b.interval().end()) return a.interval().end() < b.interval().end();
    return a.label() < b.label();
}

inline std::vector<ClusterState> build_clusters(const std::vector<DetectionSet>& inputs,
                                                const FusionConfig& config,
                                                const std::vector<double>& weights) {
    std::vector<TaggedDetection> all;
    for (std::size_t m = 0; m < inputs.size(); ++m) {
        if (inputs[m].video_id != inputs[0].video_id) {
            fail(ErrorCode::VideoIdMismatch,
                 "fusion inputs mix video '" + inputs[0].video_id + "' with '" +
                     inputs[m].video_id + "'");
        }
        for (std::size_t i = 0; i < inputs[m].detections.size(); ++i) {
            all.push_back({m, i, &inputs[m].detections[i]});
        }
    }
    std::sort(all.begin(), all.end(), process_before);

    // Per class, each detection joins the earliest-created cluster whose
    // current fused interval overlaps it at >= cluster_tiou, else opens a new
    // cluster. The fused interval is recomputed after every insertion.
    std::vector<ClusterState> clusters;
    for (const TaggedDetection& tagged : all) {
        ClusterState* target = nullptr;
        for (ClusterState& cluster : clusters) {
            if (cluster.label != tagged.det->label()) continue;
            if (tiou(tagged.det->interval(), cluster.fused_interval()) >= config.cluster_tiou) {
                target = &cluster;
                break;
            }
        }
        if (!target) {
            ClusterState fresh;
            fresh.label = tagged.det->label();
            clusters.push_back(std::move(fresh));
            target = &clusters.back();
        }
        target->add(tagged.model_index, *tagged.det, weights[tagged.model_index]);
    }
    return clusters;
}

} // namespace detail

/// Runs interval WBF clustering for one video and returns the clusters with
/// their fused detections (scores before rescaling).
inline std::vector<Cluster> wbf_1d_clusters(const std::vector<DetectionSet>& inputs,
                                            const FusionConfig& config) {
    if (inputs.empty()) {
        fail(ErrorCode::EmptyInput, "wbf_1d requires at least one input model");
    }
    detail::validate_fusion_config(config);
    std::vector<double> weights = detail::resolve_weights(config, inputs.size());

    std::vector<Cluster> out;
    for (detail::ClusterState& state : detail::build_clusters(inputs, config, weights)) {
        Detection fused(SoundEvent(state.fused_interval(), state.label), state.fused_score());
        out.push_back(Cluster{std::move(state.members), std::move(fused)});
    }
    return out;
}

/// Weighted Boxes Fusion adapted to 1D intervals: merges per-model detection
/// sets for one video into a single set. See wbf_1d_clusters for the
/// clustering step; fused scores are then rescaled per `rescale_mode` and
/// detections below `score_floor` dropped, with the output sorted by
/// descending score.
inline DetectionSet wbf_1d(const std::vector<DetectionSet>& inputs, const FusionConfig& config) {
    std::vector<Cluster> clusters = wbf_1d_clusters(inputs, config);
    const double model_count = static_cast<double>(inputs.size());

    DetectionSet out{inputs[0].video_id, {}};
    for (const Cluster& cluster : clusters) {
        double n_members = static_cast<double>(cluster.members.size());
        double score = cluster.fused.score();
        switch (config.rescale_mode) {
        case RescaleMode::none:
            break;
        case RescaleMode::by_count:
            // N can exceed T when one model lands several detections in a
            // cluster; clamp to keep scores inside [0, 1].
            score = std::min(1.0, score * n_members / model_count);
            break;
        case RescaleMode::by_count_clamped:
            score = score * std::min(n_members, model_count) / model_count;
            break;
        }
        if (score < config.score_floor) continue;
        out.detections.emplace_back(cluster.fused.event(), score);
    }
    std::sort(out.detections.begin(), out.detections.end(), detail::output_before);
    return out;
}

/// Predictions from one model over a dataset, one DetectionSet per video.
struct ModelPredictions {
    std::string model_id;
    std::vector<DetectionSet> videos;
};

/// Applies wbf_1d per video over the union of all models' video ids; a model
/// without predictions for some video contributes an empty set (it still
/// counts toward T). Output is ordered by video id. Results are identical for
/// any `jobs` value.
inline std::vector<DetectionSet> fuse_dataset(const std::vector<ModelPredictions>& inputs,
                                              const FusionConfig& config, int jobs = 1) {
    detail::validate_fusion_config(config);
    // Validates the count up front even when the video union is empty.
    detail::resolve_weights(config, inputs.size());

    std::map<std::string, std::vector<const DetectionSet*>> by_video;
    for (std::size_t m = 0; m < inputs.size(); ++m) {
        for (const DetectionSet& set : inputs[m].videos) {
            auto& slots = by_video[set.video_id];
            if (slots.empty()) slots.assign(inputs.size(), nullptr);
            if (slots[m]) {
                fail(ErrorCode::DuplicateVideoId,
                     "model '" + inputs[m].model_id + "' has two sets for video '" +
                         set.video_id + "'");
            }
            slots[m] = &set;
        }
    }

    std::vector<const std::string*> video_ids;
    video_ids.reserve(by_video.size());
    for (const auto& [id, slots] : by_video) video_ids.push_back(&id);

    std::vector<DetectionSet> out(by_video.size());
    detail::parallel_for(video_ids.size(), jobs, [&](std::size_t v) {
        const std::string& video_id = *video_ids[v];
        std::vector<DetectionSet> per_model(inputs.size());
        const auto& slots = by_video.at(video_id);
        for (std::size_t m = 0; m < inputs.size(); ++m) {
            per_model[m] = slots[m] ? *slots[m] : DetectionSet{video_id, {}};
        }
        out[v] = wbf_1d(per_model, config);
    });
    return out;
}

/// Greedy temporal non-maximum suppression: repeatedly keeps the
/// highest-score remaining detection and discards same-class detections with
/// tIoU >= threshold against it. Output in kept (descending-score) order.
inline DetectionSet nms_1d(const DetectionSet& input, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        fail(ErrorCode::InvalidConfig,
             "NMS tIoU threshold " + std::to_string(iou_threshold) + " outside (0, 1)");
    }
    std::vector<std::size_t> order = detail::ranked_indices(input.detections);
    std::vector<bool> suppressed(input.detections.size(), false);

    DetectionSet out{input.video_id, {}};
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        std::size_t i = order[pos];
        if (suppressed[i]) continue;
        const Detection& keep = input.detections[i];
        out.detections.push_back(keep);
        for (std::size_t later = pos + 1; later < order.size(); ++later) {
            std::size_t j = order[later];
            if (suppressed[j]) continue;
            const Detection& other = input.detections[j];
            if (other.label() == keep.label() &&
                tiou(keep.interval(), other.interval()) >= iou_threshold) {
                suppressed[j] = true;
            }
        }
    }
    return out;
}

} // namespace tsl
