#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "tsl/features.hpp"

using namespace tsl;

namespace {

FeatureStream random_stream(std::mt19937_64& rng, const std::string& video_id,
                            std::size_t max_frames = 40, std::size_t max_channels = 8) {
    std::uniform_int_distribution<std::size_t> f_dist(1, max_frames);
    std::uniform_int_distribution<std::size_t> c_dist(1, max_channels);
    std::uniform_real_distribution<float> v_dist(-100.0f, 100.0f);
    std::size_t frames = f_dist(rng);
    std::size_t channels = c_dist(rng);
    std::vector<float> data(frames * channels);
    for (float& v : data) v = v_dist(rng);
    return {video_id, frames, channels, std::move(data)};
}

} // namespace

TEST_CASE("feature stream invariants") {
    CHECK_NOTHROW(FeatureStream("v", 2, 3, std::vector<float>(6, 0.0f)));
    CHECK_THROWS_AS(FeatureStream("v", 0, 3, {}), Error);
    CHECK_THROWS_AS(FeatureStream("v", 2, 0, {}), Error);
    CHECK_THROWS_AS(FeatureStream("v", 2, 3, std::vector<float>(5, 0.0f)), Error);
    std::vector<float> with_nan(6, 0.0f);
    with_nan[4] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(FeatureStream("v", 2, 3, std::move(with_nan)), Error);
}

TEST_CASE("linear_resample: [0, 2] to three frames gives [0, 1, 2]") {
    FeatureStream s("v", 2, 1, {0.0f, 2.0f});
    FeatureStream out = linear_resample(s, 3);
    REQUIRE(out.frames() == 3);
    CHECK(out.data() == std::vector<float>{0.0f, 1.0f, 2.0f});
}

TEST_CASE("linear_resample: same length is the identity") {
    std::mt19937_64 rng(1);
    FeatureStream s = random_stream(rng, "v");
    CHECK(linear_resample(s, s.frames()) == s);
}

TEST_CASE("linear_resample: target 1 takes the first frame") {
    FeatureStream s("v", 3, 2, {1, 2, 3, 4, 5, 6});
    FeatureStream out = linear_resample(s, 1);
    REQUIRE(out.frames() == 1);
    CHECK(out.data() == std::vector<float>{1.0f, 2.0f});
    CHECK_THROWS_AS(linear_resample(s, 0), Error);
}

TEST_CASE("linear_resample properties over random streams") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> target_dist(2, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        FeatureStream s = random_stream(rng, "v");
        std::size_t target = target_dist(rng);
        FeatureStream out = linear_resample(s, target);

        REQUIRE(out.frames() == target);
        REQUIRE(out.channels() == s.channels());
        CHECK(out.video_id() == s.video_id());

        // Endpoints are copied bit-exactly.
        for (std::size_t c = 0; c < s.channels(); ++c) {
            CHECK(out.at(0, c) == s.at(0, c));
            CHECK(out.at(target - 1, c) == s.at(s.frames() - 1, c));
        }

        // Convexity: every output value lies in its channel's source range.
        for (std::size_t c = 0; c < s.channels(); ++c) {
            float lo = s.at(0, c), hi = s.at(0, c);
            for (std::size_t t = 1; t < s.frames(); ++t) {
                lo = std::min(lo, s.at(t, c));
                hi = std::max(hi, s.at(t, c));
            }
            for (std::size_t t = 0; t < target; ++t) {
                CHECK(out.at(t, c) >= lo - 1e-12);
                CHECK(out.at(t, c) <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("linear_resample preserves constant streams exactly") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> v_dist(-50.0f, 50.0f);
    std::uniform_int_distribution<std::size_t> f_dist(1, 30);
    std::uniform_int_distribution<std::size_t> target_dist(1, 64);
    for (int trial = 0; trial < 1000; ++trial) {
        float value = v_dist(rng);
        std::size_t frames = f_dist(rng);
        FeatureStream s("v", frames, 2, std::vector<float>(frames * 2, value));
        FeatureStream out = linear_resample(s, target_dist(rng));
        for (float v : out.data()) CHECK(v == value);
    }
}

TEST_CASE("concat_channels: three 768-channel streams give 2304 channels") {
    std::vector<FeatureStream> parts;
    for (int i = 0; i < 3; ++i) {
        parts.emplace_back("v", 4, 768, std::vector<float>(4 * 768, static_cast<float>(i)));
    }
    FeatureStream out = concat_channels(parts);
    CHECK(out.frames() == 4);
    CHECK(out.channels() == 2304);
    // Row layout: 768 zeros, 768 ones, 768 twos.
    CHECK(out.at(2, 0) == 0.0f);
    CHECK(out.at(2, 767) == 0.0f);
    CHECK(out.at(2, 768) == 1.0f);
    CHECK(out.at(2, 1536) == 2.0f);
    CHECK(out.at(2, 2303) == 2.0f);
}

TEST_CASE("concat_channels: single stream is unchanged") {
    std::mt19937_64 rng(11);
    FeatureStream s = random_stream(rng, "v");
    CHECK(concat_channels({s}) == s);
}

TEST_CASE("concat_channels: error cases") {
    CHECK_THROWS_AS(concat_channels({}), Error);

    FeatureStream a("v", 10, 1, std::vector<float>(10, 0.0f));
    FeatureStream b("v", 12, 1, std::vector<float>(12, 0.0f));
    try {
        concat_channels({a, b});
        FAIL("expected FrameCountMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FrameCountMismatch);
    }

    FeatureStream c("other", 10, 1, std::vector<float>(10, 0.0f));
    try {
        concat_channels({a, c});
        FAIL("expected VideoIdMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VideoIdMismatch);
    }
}

TEST_CASE("concat_channels is associative") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> f_dist(1, 20);
        std::size_t frames = f_dist(rng);
        auto make = [&](std::size_t channels) {
            std::vector<float> data(frames * channels);
            std::uniform_real_distribution<float> v_dist(-10.0f, 10.0f);
            for (float& v : data) v = v_dist(rng);
            return FeatureStream("v", frames, channels, std::move(data));
        };
        FeatureStream a = make(3), b = make(2), c = make(5);
        CHECK(concat_channels({concat_channels({a, b}), c}) == concat_channels({a, b, c}));
        CHECK(concat_channels({a, concat_channels({b, c})}) == concat_channels({a, b, c}));
    }
}

TEST_CASE("align_and_fuse: video 1024 plus three 768 audio parts gives 3328") {
    FeatureStream video("v", 8, 1024, std::vector<float>(8 * 1024, 1.0f));
    std::vector<FeatureStream> audio;
    for (int i = 0; i < 3; ++i) {
        audio.emplace_back("v", 8, 768, std::vector<float>(8 * 768, 2.0f));
    }
    FeatureStream out = align_and_fuse(video, audio);
    CHECK(out.frames() == 8);
    CHECK(out.channels() == 3328);
    CHECK(out.at(0, 0) == 1.0f);      // video channels first
    CHECK(out.at(0, 1023) == 1.0f);
    CHECK(out.at(0, 1024) == 2.0f);   // audio after
}

TEST_CASE("align_and_fuse resamples audio to the video frame count") {
    FeatureStream video("v", 8, 2, std::vector<float>(16, 0.0f));
    std::vector<float> ramp(16);
    for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<float>(i);
    FeatureStream audio("v", 16, 1, std::move(ramp));
    FeatureStream out = align_and_fuse(video, {audio});
    CHECK(out.frames() == 8);
    CHECK(out.channels() == 3);
    CHECK(out.at(0, 2) == 0.0f);
    CHECK(out.at(7, 2) == 15.0f);
}

TEST_CASE("align_and_fuse with no audio parts returns the video unchanged") {
    std::mt19937_64 rng(17);
    FeatureStream video = random_stream(rng, "v");
    CHECK(align_and_fuse(video, {}) == video);
}

TEST_CASE("align_and_fuse propagates video id mismatches") {
    FeatureStream video("v", 4, 1, std::vector<float>(4, 0.0f));
    FeatureStream audio("w", 4, 1, std::vector<float>(4, 0.0f));
    CHECK_THROWS_AS(align_and_fuse(video, {audio}), Error);
}
