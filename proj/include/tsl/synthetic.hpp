#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/metrics.hpp"

namespace tsl {

// ---------------------------------------------------------------------------
// Reproducibility contract
//
// Every random quantity below is derived from std::mt19937_64 (the 64-bit
// Mersenne Twister, fully specified by the C++ standard) through fixed
// transforms that use only IEEE-754 +,-,*,/ operations:
//
//   uniform [0,1)   : (next() >> 11) * 2^-53
//   uniform index   : multiply-shift reduction ((x * n) >> 64)
//   normal          : Irwin-Hall 12-sum (sum of 12 uniforms minus 6)
//   Poisson         : Knuth product-of-uniforms against exp(-lambda),
//                     exp computed by an in-library Taylor routine
//   stream split    : splitmix64 of (base_seed, index), see derive_seed
//
// The same seed therefore reproduces the same output on any conforming
// platform, independent of thread count and libm version.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// exp(-x) for x >= 0 without libm: integer part by repeated multiplication
// with a fixed e^-1 constant, fractional part by a fixed-length Taylor sum.
inline double exp_neg(double x) {
    constexpr double kExpNegOne = 0.36787944117144233;
    double n = std::floor(x);
    double r = x - n;
    double integer_part = 1.0;
    for (double k = 0.0; k < n; k += 1.0) {
        integer_part *= kExpNegOne;
        if (integer_part == 0.0) return 0.0;
    }
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 26; ++k) {
        term *= -r / static_cast<double>(k);
        sum += term;
    }
    return integer_part * sum;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    double gaussian() {
        double sum = 0.0;
        for (int i = 0; i < 12; ++i) sum += uniform();
        return sum - 6.0;
    }

    std::size_t poisson(double lambda) {
        double limit = exp_neg(lambda);
        std::size_t k = 0;
        double p = uniform();
        while (p > limit) {
            ++k;
            p *= uniform();
        }
        return k;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace detail

/// Derives the seed for sub-stream `index` of a base seed (splitmix64 of
/// base + (index+1) * golden-ratio increment). Part of the reproducibility
/// contract: per-video and per-detector streams are derived this way.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t state = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
    return detail::splitmix64(state);
}

/// Ground-truth generator settings. n_videos or events_per_video may be zero
/// (producing empty output); durations must satisfy
/// 0 < min <= max <= video_duration.
struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_videos = 0;
    std::size_t n_classes = 1;
    std::size_t events_per_video = 0;
    double video_duration = 60.0;
    double min_event_duration = 1.0;
    double max_event_duration = 5.0;
};

/// Imperfect-detector settings: Gaussian boundary jitter, event drop-out,
/// Poisson false positives per video, and Gaussian score noise.
struct NoiseConfig {
    std::uint64_t seed = 0;
    double boundary_jitter_std = 0.0;
    double drop_prob = 0.0;
    double fp_rate = 0.0;
    double score_noise_std = 0.0;
};

namespace detail {

inline void validate(const SynthConfig& cfg) {
    if (cfg.n_classes == 0) {
        fail(ErrorCode::InvalidConfig, "n_classes must be >= 1");
    }
    if (!(std::isfinite(cfg.video_duration) && cfg.video_duration > 0.0)) {
        fail(ErrorCode::InvalidConfig, "video_duration must be positive");
    }
    if (!(cfg.min_event_duration > 0.0 &&
          cfg.min_event_duration <= cfg.max_event_duration &&
          cfg.max_event_duration <= cfg.video_duration)) {
        fail(ErrorCode::InvalidConfig,
             "event durations must satisfy 0 < min <= max <= video_duration");
    }
}

inline void validate(const NoiseConfig& cfg) {
    if (!(std::isfinite(cfg.boundary_jitter_std) && cfg.boundary_jitter_std >= 0.0)) {
        fail(ErrorCode::InvalidConfig, "boundary_jitter_std must be >= 0");
    }
    if (!(cfg.drop_prob >= 0.0 && cfg.drop_prob < 1.0)) {
        fail(ErrorCode::InvalidConfig, "drop_prob must be in [0, 1)");
    }
    if (!(std::isfinite(cfg.fp_rate) && cfg.fp_rate >= 0.0)) {
        fail(ErrorCode::InvalidConfig, "fp_rate must be >= 0");
    }
    if (!(std::isfinite(cfg.score_noise_std) && cfg.score_noise_std >= 0.0)) {
        fail(ErrorCode::InvalidConfig, "score_noise_std must be >= 0");
    }
}

inline std::string synth_video_id(std::size_t index) {
    std::string digits = std::to_string(index);
    std::string id = "synth-";
    for (std::size_t i = digits.size(); i < 6; ++i) id += '0';
    return id + digits;
}

} // namespace detail

/// Vocabulary used by synthetic datasets: "class_00", "class_01", ...
inline Vocabulary synth_vocabulary(std::size_t n_classes) {
    std::vector<std::string> names;
    names.reserve(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        std::string digits = std::to_string(i);
        std::string name = "class_";
        for (std::size_t d = digits.size(); d < 2; ++d) name += '0';
        names.push_back(name + digits);
    }
    return Vocabulary(std::move(names));
}

/// Deterministic synthetic ground truth: per video, `events_per_video` events
/// with a uniform class and a uniform duration in [min, max]; the start is
/// then uniform in [0, video_duration - duration] so the event fits. Video v
/// uses stream derive_seed(seed, v); per event the label is drawn first, then
/// the duration, then the start.
inline std::vector<EventSet> gen_ground_truth(const SynthConfig& cfg) {
    detail::validate(cfg);
    std::vector<EventSet> out;
    out.reserve(cfg.n_videos);
    for (std::size_t v = 0; v < cfg.n_videos; ++v) {
        detail::Rng rng(derive_seed(cfg.seed, v));
        EventSet set{detail::synth_video_id(v), {}, cfg.video_duration};
        set.events.reserve(cfg.events_per_video);
        for (std::size_t e = 0; e < cfg.events_per_video; ++e) {
            int label = static_cast<int>(rng.uniform_index(cfg.n_classes));
            double duration = rng.uniform(cfg.min_event_duration, cfg.max_event_duration);
            double start = rng.uniform(0.0, cfg.video_duration - duration);
            set.events.emplace_back(TimeInterval(start, start + duration), label);
        }
        out.push_back(std::move(set));
    }
    return out;
}

/// Simulates one imperfect detector over ground truth. Per video v the stream
/// is derive_seed(noise.seed, v). Each GT event is dropped with probability
/// drop_prob; survivors get Gaussian jitter on both boundaries (draw order:
/// drop, start jitter, end jitter, score noise). A jitter-inverted interval
/// is repaired by reordering the endpoints and enforcing a 1 ms minimum
/// separation; starts are clamped to >= 0. The emitted score is
/// clamp(tIoU(original, jittered) + score noise, [0.01, 1]), so confidence
/// degrades with boundary error. Poisson(fp_rate) false positives per video
/// get uniform intervals inside the video duration with scores uniform in
/// (0, 0.5]; labels are uniform over the classes present anywhere in the
/// ground truth. Per FP the label is drawn first, then the two endpoints,
/// then the score.
inline std::vector<DetectionSet> simulate_detector(const std::vector<EventSet>& gt,
                                                   const NoiseConfig& noise) {
    detail::validate(noise);

    std::set<int> label_universe;
    for (const EventSet& set : gt) {
        for (const SoundEvent& e : set.events) label_universe.insert(e.label());
    }
    std::vector<int> labels(label_universe.begin(), label_universe.end());

    std::vector<DetectionSet> out;
    out.reserve(gt.size());
    for (std::size_t v = 0; v < gt.size(); ++v) {
        const EventSet& events = gt[v];
        detail::Rng rng(derive_seed(noise.seed, v));
        DetectionSet dets{events.video_id, {}};

        for (const SoundEvent& ev : events.events) {
            if (rng.uniform() < noise.drop_prob) continue;
            double start_jitter = rng.gaussian() * noise.boundary_jitter_std;
            double end_jitter = rng.gaussian() * noise.boundary_jitter_std;
            double score_jitter = rng.gaussian() * noise.score_noise_std;

            double start = std::max(0.0, ev.interval().start() + start_jitter);
            double end = ev.interval().end() + end_jitter;
            if (end <= start) {
                double lo = std::max(0.0, std::min(start, end));
                double hi = std::max(start, end);
                if (hi < lo + 1e-3) hi = lo + 1e-3;
                start = lo;
                end = hi;
            }
            TimeInterval emitted(start, end);
            double score = tiou(ev.interval(), emitted) + score_jitter;
            score = std::clamp(score, 0.01, 1.0);
            dets.detections.emplace_back(SoundEvent(emitted, ev.label()), score);
        }

        if (!labels.empty()) {
            double video_end = events.duration.value_or(1.0);
            if (!events.duration) {
                for (const SoundEvent& ev : events.events) {
                    video_end = std::max(video_end, ev.interval().end());
                }
            }
            std::size_t fp_count = rng.poisson(noise.fp_rate);
            for (std::size_t f = 0; f < fp_count; ++f) {
                int label = labels[rng.uniform_index(labels.size())];
                double a = rng.uniform(0.0, video_end);
                double b = rng.uniform(0.0, video_end);
                double lo = std::min(a, b);
                double hi = std::max(a, b);
                if (hi < lo + 1e-3) hi = lo + 1e-3;
                double score = 0.5 * (1.0 - rng.uniform());
                dets.detections.emplace_back(SoundEvent(TimeInterval(lo, hi), label), score);
            }
        }
        out.push_back(std::move(dets));
    }
    return out;
}

} // namespace tsl
