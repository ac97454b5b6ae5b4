#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "tsl/fusion.hpp"
#include "tsl/synthetic.hpp"
#include "test_support.hpp"

using namespace tsl;
using testsupport::det;

namespace {

FusionConfig config_with(RescaleMode mode, double cluster_tiou = 0.55) {
    FusionConfig config;
    config.rescale_mode = mode;
    config.cluster_tiou = cluster_tiou;
    return config;
}

bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b) {
    if (a.size() != b.size()) return false;
    auto key = [](const Detection& d) {
        return std::tuple(d.score(), d.interval().start(), d.interval().end(), d.label());
    };
    std::vector<Detection> sa = a, sb = b;
    auto by_key = [&](const Detection& x, const Detection& y) { return key(x) < key(y); };
    std::sort(sa.begin(), sa.end(), by_key);
    std::sort(sb.begin(), sb.end(), by_key);
    for (std::size_t i = 0; i < sa.size(); ++i) {
        if (!(key(sa[i]) == key(sb[i]))) return false;
    }
    return true;
}

// A random single-video detection set for property tests.
DetectionSet random_set(std::mt19937_64& rng, const std::string& video_id) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> n_dist(0, 12);
    std::uniform_int_distribution<int> label_dist(0, 2);
    DetectionSet set{video_id, {}};
    int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        double start = unit(rng) * 20.0;
        double dur = 0.5 + unit(rng) * 4.0;
        set.detections.push_back(det(start, start + dur, label_dist(rng), unit(rng)));
    }
    return set;
}

} // namespace

TEST_CASE("wbf merges agreeing models into one averaged detection") {
    std::vector<DetectionSet> inputs{
        {"v", {det(0, 2, 0, 0.8)}},
        {"v", {det(0, 2, 0, 0.4)}},
    };
    DetectionSet fused = wbf_1d(inputs, config_with(RescaleMode::by_count_clamped));
    REQUIRE(fused.detections.size() == 1);
    const Detection& d = fused.detections[0];
    CHECK(d.interval().start() == 0.0);
    CHECK(d.interval().end() == 2.0);
    CHECK(d.label() == 0);
    // Both models present: rescale factor min(2,2)/2 = 1.
    CHECK_THAT(d.score(), Catch::Matchers::WithinAbs(0.6, 1e-12));
}

TEST_CASE("wbf keeps weakly overlapping detections in separate clusters") {
    std::vector<DetectionSet> inputs{
        {"v", {det(1, 3, 0, 0.6)}},
        {"v", {det(2, 4, 0, 0.6)}},
    };
    // tIoU([1,3],[2,4]) = 1/3 < 0.55, so each stays a singleton cluster and
    // is rescaled by min(1,2)/2 = 0.5.
    DetectionSet fused = wbf_1d(inputs, config_with(RescaleMode::by_count_clamped));
    REQUIRE(fused.detections.size() == 2);
    for (const Detection& d : fused.detections) {
        CHECK_THAT(d.score(), Catch::Matchers::WithinAbs(0.3, 1e-12));
    }
    CHECK(fused.detections[0].interval() == TimeInterval(1, 3));
    CHECK(fused.detections[1].interval() == TimeInterval(2, 4));
}

TEST_CASE("wbf weighted average uses weight times score per member") {
    FusionConfig config = config_with(RescaleMode::none);
    config.weights = {3.0, 1.0};
    std::vector<DetectionSet> inputs{
        {"v", {det(0, 2, 0, 0.5)}},
        {"v", {det(1, 3, 0, 1.0)}},
    };
    // Member weights: 3*0.5 = 1.5 and 1*1.0 = 1.0.
    // start = (1.5*0 + 1.0*1)/2.5 = 0.4; end = (1.5*2 + 1.0*3)/2.5 = 2.4.
    // score = (3*0.5 + 1*1.0)/(3+1) = 0.625.
    FusionConfig permissive = config;
    permissive.cluster_tiou = 0.3; // tIoU([0,2],[1,3]) = 1/3 qualifies
    DetectionSet fused = wbf_1d(inputs, permissive);
    REQUIRE(fused.detections.size() == 1);
    CHECK_THAT(fused.detections[0].interval().start(), Catch::Matchers::WithinAbs(0.4, 1e-12));
    CHECK_THAT(fused.detections[0].interval().end(), Catch::Matchers::WithinAbs(2.4, 1e-12));
    CHECK_THAT(fused.detections[0].score(), Catch::Matchers::WithinAbs(0.625, 1e-12));
}

TEST_CASE("wbf never merges across classes") {
    std::vector<DetectionSet> inputs{
        {"v", {det(0, 2, 0, 0.8)}},
        {"v", {det(0, 2, 1, 0.7)}},
    };
    DetectionSet fused = wbf_1d(inputs, config_with(RescaleMode::none));
    REQUIRE(fused.detections.size() == 2);
    CHECK(fused.detections[0].label() != fused.detections[1].label());
}

TEST_CASE("wbf with all-zero member scores falls back to the unweighted mean") {
    std::vector<DetectionSet> inputs{
        {"v", {det(0, 2, 0, 0.0)}},
        {"v", {det(1, 3, 0, 0.0)}},
    };
    FusionConfig config = config_with(RescaleMode::none, 0.3);
    auto clusters = wbf_1d_clusters(inputs, config);
    REQUIRE(clusters.size() == 1);
    CHECK_THAT(clusters[0].fused.interval().start(), Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(clusters[0].fused.interval().end(), Catch::Matchers::WithinAbs(2.5, 1e-12));
    CHECK(clusters[0].fused.score() == 0.0);
}

TEST_CASE("single model with mode none is the identity on NMS-clean input") {
    std::mt19937_64 rng(2024);
    FusionConfig config = config_with(RescaleMode::none);
    for (int trial = 0; trial < 200; ++trial) {
        // NMS at the cluster threshold guarantees no same-class pair reaches
        // cluster_tiou, so every detection forms its own singleton cluster.
        DetectionSet input = nms_1d(random_set(rng, "v"), config.cluster_tiou);
        DetectionSet fused = wbf_1d({input}, config);
        CHECK(same_detections(fused.detections, input.detections));
    }
}

TEST_CASE("fused intervals stay inside the member hull") {
    std::mt19937_64 rng(77);
    FusionConfig config = config_with(RescaleMode::none, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DetectionSet> inputs{random_set(rng, "v"), random_set(rng, "v"),
                                         random_set(rng, "v")};
        for (const Cluster& cluster : wbf_1d_clusters(inputs, config)) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            double smin = 1.0, smax = 0.0;
            for (const ClusterMember& m : cluster.members) {
                lo = std::min(lo, m.detection.interval().start());
                hi = std::max(hi, m.detection.interval().end());
                smin = std::min(smin, m.detection.score());
                smax = std::max(smax, m.detection.score());
                CHECK(m.detection.label() == cluster.fused.label());
            }
            CHECK(cluster.fused.interval().start() >= lo - 1e-12);
            CHECK(cluster.fused.interval().end() <= hi + 1e-12);
            CHECK(cluster.fused.score() >= smin - 1e-12);
            CHECK(cluster.fused.score() <= smax + 1e-12);
        }
    }
}

TEST_CASE("wbf output is invariant under model permutation with equal weights") {
    std::mt19937_64 rng(88);
    FusionConfig config = config_with(RescaleMode::by_count_clamped);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<DetectionSet> inputs{random_set(rng, "v"), random_set(rng, "v"),
                                         random_set(rng, "v")};
        DetectionSet base = wbf_1d(inputs, config);
        std::vector<DetectionSet> permuted{inputs[2], inputs[0], inputs[1]};
        DetectionSet again = wbf_1d(permuted, config);
        REQUIRE(again.detections.size() == base.detections.size());
        for (std::size_t i = 0; i < base.detections.size(); ++i) {
            CHECK(again.detections[i].interval() == base.detections[i].interval());
            CHECK(again.detections[i].label() == base.detections[i].label());
            CHECK_THAT(again.detections[i].score(),
                       Catch::Matchers::WithinAbs(base.detections[i].score(), 1e-12));
        }
    }
}

TEST_CASE("wbf scores stay in range for every mode") {
    std::mt19937_64 rng(99);
    for (RescaleMode mode :
         {RescaleMode::none, RescaleMode::by_count, RescaleMode::by_count_clamped}) {
        FusionConfig config = config_with(mode, 0.4);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<DetectionSet> inputs{random_set(rng, "v"), random_set(rng, "v")};
            DetectionSet fused = wbf_1d(inputs, config);
            for (std::size_t i = 0; i < fused.detections.size(); ++i) {
                const Detection& d = fused.detections[i];
                CHECK(d.score() >= 0.0);
                CHECK(d.score() <= 1.0);
                if (i > 0) CHECK(d.score() <= fused.detections[i - 1].score());
            }
        }
    }
}

TEST_CASE("by_count can exceed by_count_clamped only via same-model stacking") {
    // One model contributes both members, so N=2 with T=1.
    std::vector<DetectionSet> inputs{{"v", {det(0, 2, 0, 0.9), det(0, 2.01, 0, 0.8)}}};
    auto clusters = wbf_1d_clusters(inputs, config_with(RescaleMode::none));
    REQUIRE(clusters.size() == 1);
    REQUIRE(clusters[0].members.size() == 2);
    double raw = clusters[0].fused.score();

    DetectionSet by_count = wbf_1d(inputs, config_with(RescaleMode::by_count));
    REQUIRE(by_count.detections.size() == 1);
    CHECK(by_count.detections[0].score() == std::min(1.0, raw * 2.0));

    DetectionSet clamped = wbf_1d(inputs, config_with(RescaleMode::by_count_clamped));
    REQUIRE(clamped.detections.size() == 1);
    CHECK_THAT(clamped.detections[0].score(), Catch::Matchers::WithinAbs(raw, 1e-12));
}

TEST_CASE("score_floor drops weak fused detections") {
    std::vector<DetectionSet> inputs{
        {"v", {det(1, 3, 0, 0.6)}},
        {"v", {det(2, 4, 0, 0.6)}},
    };
    FusionConfig config = config_with(RescaleMode::by_count_clamped);
    config.score_floor = 0.4; // both rescale to 0.3 < 0.4
    DetectionSet fused = wbf_1d(inputs, config);
    CHECK(fused.detections.empty());
}

TEST_CASE("wbf validation errors") {
    std::vector<DetectionSet> mismatched{{"a", {}}, {"b", {}}};
    CHECK_THROWS_AS(wbf_1d(mismatched, FusionConfig{}), Error);

    std::vector<DetectionSet> ok{{"a", {}}};
    FusionConfig bad_weights;
    bad_weights.weights = {1.0, 2.0};
    try {
        wbf_1d(ok, bad_weights);
        FAIL("expected WeightCountMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WeightCountMismatch);
    }

    FusionConfig bad_tiou;
    bad_tiou.cluster_tiou = 1.0;
    CHECK_THROWS_AS(wbf_1d(ok, bad_tiou), Error);
    FusionConfig bad_floor;
    bad_floor.score_floor = 1.0;
    CHECK_THROWS_AS(wbf_1d(ok, bad_floor), Error);
    FusionConfig neg_weight;
    neg_weight.weights = {-1.0};
    CHECK_THROWS_AS(wbf_1d(ok, neg_weight), Error);
}

TEST_CASE("fuse_dataset: unanimous ensemble with mode none reproduces the input") {
    std::mt19937_64 rng(31415);
    DetectionSet shared = nms_1d(random_set(rng, "v1"), 0.55);
    std::vector<ModelPredictions> inputs{
        {"m0", {shared}}, {"m1", {shared}}, {"m2", {shared}}};
    auto fused = fuse_dataset(inputs, config_with(RescaleMode::none));
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].video_id == "v1");
    CHECK(same_detections(fused[0].detections, shared.detections));
}

TEST_CASE("fuse_dataset: a video covered by one of three models rescales by 1/3") {
    std::vector<ModelPredictions> inputs{
        {"m0", {{"v1", {det(0, 1, 0, 0.9)}}, {"v2", {det(5, 6, 0, 0.6)}}}},
        {"m1", {{"v1", {det(0, 1, 0, 0.9)}}}},
        {"m2", {{"v1", {det(0, 1, 0, 0.9)}}}},
    };
    auto fused = fuse_dataset(inputs, config_with(RescaleMode::by_count_clamped));
    REQUIRE(fused.size() == 2);
    CHECK(fused[0].video_id == "v1");
    CHECK(fused[1].video_id == "v2");
    REQUIRE(fused[0].detections.size() == 1);
    CHECK_THAT(fused[0].detections[0].score(), Catch::Matchers::WithinAbs(0.9, 1e-12));
    REQUIRE(fused[1].detections.size() == 1);
    CHECK_THAT(fused[1].detections[0].score(), Catch::Matchers::WithinAbs(0.2, 1e-12));
}

TEST_CASE("fuse_dataset: empty union yields empty output") {
    std::vector<ModelPredictions> inputs{{"m0", {}}, {"m1", {}}};
    CHECK(fuse_dataset(inputs, FusionConfig{}).empty());
}

TEST_CASE("fuse_dataset: duplicate video within one model is rejected") {
    std::vector<ModelPredictions> inputs{{"m0", {{"v1", {}}, {"v1", {}}}}};
    try {
        fuse_dataset(inputs, FusionConfig{});
        FAIL("expected DuplicateVideoId");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateVideoId);
    }
}

TEST_CASE("fuse_dataset output is independent of the job count") {
    std::mt19937_64 rng(161803);
    std::vector<ModelPredictions> inputs{{"m0", {}}, {"m1", {}}, {"m2", {}}};
    for (int v = 0; v < 24; ++v) {
        std::string id = "video-" + std::to_string(v);
        for (auto& model : inputs) model.videos.push_back(random_set(rng, id));
    }
    auto serial = fuse_dataset(inputs, FusionConfig{}, 1);
    auto parallel = fuse_dataset(inputs, FusionConfig{}, 8);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t v = 0; v < serial.size(); ++v) {
        CHECK(serial[v].video_id == parallel[v].video_id);
        REQUIRE(serial[v].detections.size() == parallel[v].detections.size());
        for (std::size_t i = 0; i < serial[v].detections.size(); ++i) {
            CHECK(serial[v].detections[i] == parallel[v].detections[i]);
        }
    }
}

TEST_CASE("nms_1d keeps the stronger of two identical detections") {
    DetectionSet input{"v", {det(0, 1, 0, 0.8), det(0, 1, 0, 0.9)}};
    DetectionSet out = nms_1d(input, 0.5);
    REQUIRE(out.detections.size() == 1);
    CHECK(out.detections[0].score() == 0.9);
}

TEST_CASE("nms_1d keeps disjoint detections") {
    DetectionSet input{"v", {det(0, 1, 0, 0.8), det(2, 3, 0, 0.9)}};
    CHECK(nms_1d(input, 0.5).detections.size() == 2);
}

TEST_CASE("nms_1d chain trace") {
    DetectionSet input{"v", {det(0, 2, 0, 0.9), det(1, 3, 0, 0.8), det(2.5, 4, 0, 0.7)}};
    DetectionSet out = nms_1d(input, 0.3);
    REQUIRE(out.detections.size() == 2);
    CHECK(out.detections[0].interval() == TimeInterval(0, 2));
    CHECK(out.detections[1].interval() == TimeInterval(2.5, 4));
}

TEST_CASE("nms_1d output is an antichain and threshold is validated") {
    std::mt19937_64 rng(271828);
    for (int trial = 0; trial < 100; ++trial) {
        DetectionSet out = nms_1d(random_set(rng, "v"), 0.45);
        for (std::size_t i = 0; i < out.detections.size(); ++i) {
            for (std::size_t j = i + 1; j < out.detections.size(); ++j) {
                if (out.detections[i].label() != out.detections[j].label()) continue;
                CHECK(tiou(out.detections[i].interval(), out.detections[j].interval()) < 0.45);
            }
        }
    }
    CHECK_THROWS_AS(nms_1d(DetectionSet{"v", {}}, 0.0), Error);
    CHECK_THROWS_AS(nms_1d(DetectionSet{"v", {}}, 1.0), Error);
}
