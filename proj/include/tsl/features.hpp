#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"

namespace tsl {

/// A T x C matrix of per-frame feature values, row-major by frame.
/// Values are 32-bit floats (the on-disk precision) and must be finite.
class FeatureStream {
public:
    FeatureStream(std::string video_id, std::size_t frames, std::size_t channels,
                  std::vector<float> data)
        : video_id_(std::move(video_id)), frames_(frames), channels_(channels),
          data_(std::move(data)) {
        if (frames_ == 0 || channels_ == 0) {
            fail(ErrorCode::InvalidConfig, "feature stream needs frames >= 1 and channels >= 1");
        }
        if (data_.size() != frames_ * channels_) {
            fail(ErrorCode::LengthMismatch,
                 "feature stream '" + video_id_ + "': " + std::to_string(data_.size()) +
                     " values for " + std::to_string(frames_) + "x" +
                     std::to_string(channels_));
        }
        for (float v : data_) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::ValidationError,
                     "feature stream '" + video_id_ + "' contains a non-finite value");
            }
        }
    }

    const std::string& video_id() const noexcept { return video_id_; }
    std::size_t frames() const noexcept { return frames_; }
    std::size_t channels() const noexcept { return channels_; }
    const std::vector<float>& data() const noexcept { return data_; }

    std::span<const float> row(std::size_t t) const noexcept {
        return {data_.data() + t * channels_, channels_};
    }
    float at(std::size_t t, std::size_t c) const noexcept { return data_[t * channels_ + c]; }

    friend bool operator==(const FeatureStream&, const FeatureStream&) = default;

private:
    std::string video_id_;
    std::size_t frames_;
    std::size_t channels_;
    std::vector<float> data_;
};

/// Temporal resampling by linear interpolation with endpoint-aligned sample
/// mapping: output row i reads source position i * (T-1) / (target-1), so the
/// first and last rows are copied exactly and resampling to the source length
/// is the identity. target_frames == 1 takes the first frame.
inline FeatureStream linear_resample(const FeatureStream& s, std::size_t target_frames) {
    if (target_frames == 0) {
        fail(ErrorCode::InvalidConfig, "target_frames must be >= 1");
    }
    const std::size_t source_frames = s.frames();
    const std::size_t channels = s.channels();
    if (target_frames == source_frames) {
        return s;
    }
    std::vector<float> data(target_frames * channels);
    if (target_frames == 1) {
        std::span<const float> first = s.row(0);
        std::copy(first.begin(), first.end(), data.begin());
        return {s.video_id(), 1, channels, std::move(data)};
    }
    for (std::size_t i = 0; i < target_frames; ++i) {
        double pos = static_cast<double>(i) * static_cast<double>(source_frames - 1) /
                     static_cast<double>(target_frames - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo >= source_frames - 1) lo = source_frames - 1;
        std::size_t hi = std::min(lo + 1, source_frames - 1);
        double frac = pos - static_cast<double>(lo);
        std::span<const float> a = s.row(lo);
        std::span<const float> b = s.row(hi);
        for (std::size_t c = 0; c < channels; ++c) {
            // Interpolate in double, narrow to float; keeps constants and
            // endpoints bit-exact.
            double v = (1.0 - frac) * static_cast<double>(a[c]) +
                       frac * static_cast<double>(b[c]);
            data[i * channels + c] = static_cast<float>(v);
        }
    }
    return {s.video_id(), target_frames, channels, std::move(data)};
}

/// Concatenates streams along the channel dimension, in list order. All
/// streams must share the video id and frame count.
inline FeatureStream concat_channels(const std::vector<FeatureStream>& streams) {
    if (streams.empty()) {
        fail(ErrorCode::EmptyInput, "concat_channels requires at least one stream");
    }
    const std::size_t frames = streams[0].frames();
    std::size_t total_channels = 0;
    for (const FeatureStream& s : streams) {
        if (s.video_id() != streams[0].video_id()) {
            fail(ErrorCode::VideoIdMismatch,
                 "concat mixes video '" + streams[0].video_id() + "' with '" + s.video_id() +
                     "'");
        }
        if (s.frames() != frames) {
            fail(ErrorCode::FrameCountMismatch,
                 "concat mixes frame counts " + std::to_string(frames) + " and " +
                     std::to_string(s.frames()));
        }
        total_channels += s.channels();
    }
    std::vector<float> data(frames * total_channels);
    for (std::size_t t = 0; t < frames; ++t) {
        float* dst = data.data() + t * total_channels;
        for (const FeatureStream& s : streams) {
            std::span<const float> src = s.row(t);
            dst = std::copy(src.begin(), src.end(), dst);
        }
    }
    return {streams[0].video_id(), frames, total_channels, std::move(data)};
}

/// Early fusion: resamples every audio part to the video's frame count, then
/// concatenates video channels first, audio parts after, in list order.
/// With no audio parts the video stream is returned unchanged.
inline FeatureStream align_and_fuse(const FeatureStream& video,
                                    const std::vector<FeatureStream>& audio_parts) {
    if (audio_parts.empty()) return video;
    std::vector<FeatureStream> aligned;
    aligned.reserve(audio_parts.size() + 1);
    aligned.push_back(video);
    for (const FeatureStream& part : audio_parts) {
        aligned.push_back(linear_resample(part, video.frames()));
    }
    return concat_channels(aligned);
}

} // namespace tsl
