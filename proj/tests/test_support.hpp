#pragma once

// Shared helpers for the test suites: small-instance generators for the
// metric oracle comparison and a few construction shorthands.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tsl/core.hpp"

namespace testsupport {

inline tsl::SoundEvent event(double start, double end, int label) {
    return {tsl::TimeInterval(start, end), label};
}

inline tsl::Detection det(double start, double end, int label, double score) {
    return {event(start, end, label), score};
}

struct Instance {
    std::vector<tsl::EventSet> gts;
    std::vector<tsl::DetectionSet> preds;
    std::size_t n_classes = 0;
};

// Randomized small evaluation instance: up to 5 videos, 3 classes, 10 events
// per video. Detections mix jittered copies of GT events (sometimes exact
// copies) with random intervals; scores are quantized so ties occur. Some
// videos get no predictions; at least one GT event always exists.
inline Instance random_instance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    Instance inst;
    inst.n_classes = static_cast<std::size_t>(uniform_int(1, 3));
    int n_videos = uniform_int(1, 5);
    const double video_duration = 30.0;

    for (int v = 0; v < n_videos; ++v) {
        tsl::EventSet gt{"video_" + std::to_string(v), {}, video_duration};
        int n_events = uniform_int(0, 10);
        for (int e = 0; e < n_events; ++e) {
            double duration = 0.5 + 4.0 * unit(rng);
            double start = unit(rng) * (video_duration - duration);
            gt.events.push_back(event(start, start + duration,
                                      uniform_int(0, static_cast<int>(inst.n_classes) - 1)));
        }
        inst.gts.push_back(std::move(gt));
    }
    // Guarantee at least one GT event overall.
    if ([&] {
            for (const auto& s : inst.gts) {
                if (!s.events.empty()) return false;
            }
            return true;
        }()) {
        inst.gts[0].events.push_back(event(1.0, 2.0, 0));
    }

    for (int v = 0; v < n_videos; ++v) {
        if (unit(rng) < 0.15) continue; // some videos have no predictions
        const tsl::EventSet& gt = inst.gts[static_cast<std::size_t>(v)];
        tsl::DetectionSet preds{gt.video_id, {}};
        // Jittered / exact copies of GT events.
        for (const tsl::SoundEvent& e : gt.events) {
            if (unit(rng) < 0.3) continue;
            double score = static_cast<double>(uniform_int(1, 10)) / 10.0; // quantized: ties
            if (unit(rng) < 0.25) {
                preds.detections.push_back(tsl::Detection(e, score));
            } else {
                double jitter_a = (unit(rng) - 0.5) * 2.0;
                double jitter_b = (unit(rng) - 0.5) * 2.0;
                double start = std::max(0.0, e.interval().start() + jitter_a);
                double end = e.interval().end() + jitter_b;
                if (end <= start + 0.01) end = start + 0.01;
                int label = unit(rng) < 0.85 ? e.label()
                                             : uniform_int(0, static_cast<int>(inst.n_classes) - 1);
                preds.detections.push_back(det(start, end, label, score));
            }
        }
        // Pure noise detections.
        int noise = uniform_int(0, 4);
        for (int i = 0; i < noise; ++i) {
            double duration = 0.2 + 3.0 * unit(rng);
            double start = unit(rng) * (video_duration - duration);
            preds.detections.push_back(det(start, start + duration,
                                           uniform_int(0, static_cast<int>(inst.n_classes) - 1),
                                           static_cast<double>(uniform_int(1, 10)) / 10.0));
        }
        inst.preds.push_back(std::move(preds));
    }
    return inst;
}

} // namespace testsupport
