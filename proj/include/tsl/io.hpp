#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/features.hpp"

namespace tsl {

// ---------------------------------------------------------------------------
// Detection / ground-truth JSON document
//
//   {
//     "vocabulary": ["dog", ...],
//     "videos": { "v1": [ {"label": "dog", "start": 0.0, "end": 1.0,
//                          "score": 0.9}, ... ], ... },
//     "durations": { "v1": 60.0, ... }          // optional, per video
//   }
//
// Ground truth uses the same schema with "score" omitted from every record;
// score presence must be uniform within a file. Video keys are read
// order-insensitively (and written sorted); record order within a video is
// preserved. Floats serialize with shortest round-trip decimals.
// ---------------------------------------------------------------------------

/// Parsed contents of a detection-format file. Exactly one of `detections`
/// (scored file) or `events` (ground-truth file) is populated, per `scored`.
/// A file with no records at all parses as unscored with empty videos kept.
struct DetectionFileData {
    Vocabulary vocabulary;
    bool scored = false;
    std::vector<DetectionSet> detections;
    std::vector<EventSet> events;

    /// Ground-truth view; a scored file is accepted with scores dropped.
    std::vector<EventSet> as_event_sets() const {
        if (!scored) return events;
        std::vector<EventSet> out;
        out.reserve(detections.size());
        for (const DetectionSet& set : detections) {
            EventSet events_set{set.video_id, {}, std::nullopt};
            events_set.events.reserve(set.detections.size());
            for (const Detection& d : set.detections) events_set.events.push_back(d.event());
            out.push_back(std::move(events_set));
        }
        return out;
    }

    /// Prediction view; requires scores unless the file holds no records.
    std::vector<DetectionSet> as_detection_sets() const {
        if (scored) return detections;
        std::vector<DetectionSet> out;
        out.reserve(events.size());
        for (const EventSet& set : events) {
            if (!set.events.empty()) {
                fail(ErrorCode::ValidationError,
                     "video '" + set.video_id +
                         "': records carry no scores; not usable as predictions");
            }
            out.push_back(DetectionSet{set.video_id, {}});
        }
        return out;
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        (void)value;
        bool known = false;
        for (const char* k : allowed) {
            if (key == k) known = true;
        }
        if (!known) {
            fail(ErrorCode::ValidationError, where + ": unknown key '" + key + "'");
        }
    }
}

inline double number_field(const nlohmann::json& record, const char* key,
                           const std::string& where) {
    if (!record.contains(key) || !record.at(key).is_number()) {
        fail(ErrorCode::ValidationError, where + ": missing or non-numeric '" +
                                             std::string(key) + "'");
    }
    return record.at(key).get<double>();
}

} // namespace detail

/// Parses a detection-format JSON document from a string. Malformed JSON
/// raises ParseError with the byte position; schema and invariant problems
/// raise ValidationError naming the offending video and record index.
inline DetectionFileData parse_detections_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ParseError,
             "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) {
        fail(ErrorCode::ValidationError, "document root must be an object");
    }
    detail::require_keys(doc, {"vocabulary", "videos", "durations"}, "document root");
    if (!doc.contains("vocabulary") || !doc.at("vocabulary").is_array()) {
        fail(ErrorCode::ValidationError, "'vocabulary' must be an array of strings");
    }
    if (!doc.contains("videos") || !doc.at("videos").is_object()) {
        fail(ErrorCode::ValidationError, "'videos' must be an object");
    }

    std::vector<std::string> names;
    for (const auto& entry : doc.at("vocabulary")) {
        if (!entry.is_string()) {
            fail(ErrorCode::ValidationError, "'vocabulary' must be an array of strings");
        }
        names.push_back(entry.get<std::string>());
    }
    DetectionFileData data;
    try {
        data.vocabulary = Vocabulary(std::move(names));
    } catch (const Error& e) {
        fail(ErrorCode::ValidationError, std::string("vocabulary: ") + e.what());
    }

    std::map<std::string, double> durations;
    if (doc.contains("durations")) {
        if (!doc.at("durations").is_object()) {
            fail(ErrorCode::ValidationError, "'durations' must be an object");
        }
        for (const auto& [video_id, value] : doc.at("durations").items()) {
            if (!doc.at("videos").contains(video_id)) {
                fail(ErrorCode::ValidationError,
                     "duration given for unknown video '" + video_id + "'");
            }
            if (!value.is_number()) {
                fail(ErrorCode::ValidationError,
                     "duration for video '" + video_id + "' must be a number");
            }
            durations[video_id] = value.get<double>();
        }
    }

    bool saw_record = false;
    for (const auto& [video_id, records] : doc.at("videos").items()) {
        if (!records.is_array()) {
            fail(ErrorCode::ValidationError,
                 "video '" + video_id + "': records must be an array");
        }
        EventSet event_set{video_id, {}, std::nullopt};
        DetectionSet det_set{video_id, {}};
        if (auto it = durations.find(video_id); it != durations.end()) {
            event_set.duration = it->second;
        }
        std::size_t index = 0;
        for (const auto& record : records) {
            const std::string where = "video '" + video_id + "' record " + std::to_string(index);
            if (!record.is_object()) {
                fail(ErrorCode::ValidationError, where + ": must be an object");
            }
            detail::require_keys(record, {"label", "start", "end", "score"}, where);
            if (!record.contains("label") || !record.at("label").is_string()) {
                fail(ErrorCode::ValidationError, where + ": missing or non-string 'label'");
            }
            bool has_score = record.contains("score");
            if (!saw_record) {
                data.scored = has_score;
            } else if (has_score != data.scored) {
                fail(ErrorCode::MixedScorePresence,
                     where + ": 'score' must be present on all records or none");
            }
            saw_record = true;

            std::string label_name = record.at("label").get<std::string>();
            auto label = data.vocabulary.find(label_name);
            if (!label) {
                fail(ErrorCode::ValidationError,
                     where + ": label '" + label_name + "' not in vocabulary");
            }
            double start = detail::number_field(record, "start", where);
            double end = detail::number_field(record, "end", where);
            try {
                SoundEvent event(TimeInterval(start, end), *label);
                if (data.scored) {
                    double score = detail::number_field(record, "score", where);
                    det_set.detections.emplace_back(event, score);
                } else {
                    event_set.events.push_back(event);
                }
            } catch (const Error& e) {
                fail(ErrorCode::ValidationError,
                     where + ": " + error_code_name(e.code()) + ": " + e.what());
            }
            ++index;
        }
        data.detections.push_back(std::move(det_set));
        data.events.push_back(std::move(event_set));
    }

    // Keep only the side that matches the file's scored-ness; re-validate
    // set-level invariants (duration caps, label ranges) against the
    // embedded vocabulary.
    if (data.scored) {
        if (!durations.empty()) {
            fail(ErrorCode::ValidationError,
                 "'durations' only applies to ground-truth files (records carry scores)");
        }
        data.events.clear();
        for (const DetectionSet& set : data.detections) {
            validate_detection_set(set, data.vocabulary);
        }
    } else {
        data.detections.clear();
        for (const EventSet& set : data.events) {
            try {
                validate_event_set(set, data.vocabulary);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::EventExceedsDuration ||
                    e.code() == ErrorCode::InvalidConfig) {
                    fail(ErrorCode::ValidationError, e.what());
                }
                throw;
            }
        }
    }
    return data;
}

/// Reads and validates a detection-format file from disk.
inline DetectionFileData read_detections(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_detections_json(buffer.str());
}

namespace detail {

inline nlohmann::json record_json(const SoundEvent& event, const Vocabulary& vocabulary) {
    nlohmann::json record;
    record["label"] = vocabulary.name(event.label());
    record["start"] = event.interval().start();
    record["end"] = event.interval().end();
    return record;
}

} // namespace detail

/// Serializes scored detection sets to the JSON document format.
inline std::string write_detections_json(const Vocabulary& vocabulary,
                                         const std::vector<DetectionSet>& sets) {
    nlohmann::json doc;
    doc["vocabulary"] = vocabulary.names();
    doc["videos"] = nlohmann::json::object();
    for (const DetectionSet& set : sets) {
        validate_detection_set(set, vocabulary);
        if (doc["videos"].contains(set.video_id)) {
            fail(ErrorCode::DuplicateVideoId, "duplicate video id '" + set.video_id + "'");
        }
        nlohmann::json records = nlohmann::json::array();
        for (const Detection& det : set.detections) {
            nlohmann::json record = detail::record_json(det.event(), vocabulary);
            record["score"] = det.score();
            records.push_back(std::move(record));
        }
        doc["videos"][set.video_id] = std::move(records);
    }
    return doc.dump(2) + "\n";
}

/// Serializes ground-truth event sets (no scores; durations included for
/// sets that carry one).
inline std::string write_events_json(const Vocabulary& vocabulary,
                                     const std::vector<EventSet>& sets) {
    nlohmann::json doc;
    doc["vocabulary"] = vocabulary.names();
    doc["videos"] = nlohmann::json::object();
    nlohmann::json durations = nlohmann::json::object();
    for (const EventSet& set : sets) {
        validate_event_set(set, vocabulary);
        if (doc["videos"].contains(set.video_id)) {
            fail(ErrorCode::DuplicateVideoId, "duplicate video id '" + set.video_id + "'");
        }
        nlohmann::json records = nlohmann::json::array();
        for (const SoundEvent& event : set.events) {
            records.push_back(detail::record_json(event, vocabulary));
        }
        doc["videos"][set.video_id] = std::move(records);
        if (set.duration) durations[set.video_id] = *set.duration;
    }
    if (!durations.empty()) doc["durations"] = std::move(durations);
    return doc.dump(2) + "\n";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        fail(ErrorCode::IoError, "failed writing '" + path.string() + "'");
    }
}

inline void write_detections(const std::filesystem::path& path, const Vocabulary& vocabulary,
                             const std::vector<DetectionSet>& sets) {
    write_text_file(path, write_detections_json(vocabulary, sets));
}

inline void write_events(const std::filesystem::path& path, const Vocabulary& vocabulary,
                         const std::vector<EventSet>& sets) {
    write_text_file(path, write_events_json(vocabulary, sets));
}

// ---------------------------------------------------------------------------
// Feature stream binary format
//
//   offset  size  field
//        0     4  magic "TSLF"
//        4     4  format version, u32 little-endian (currently 1)
//        8     4  frame count T, u32 little-endian
//       12     4  channel count C, u32 little-endian
//       16     2  video id byte length, u16 little-endian
//       18     L  video id, UTF-8
//     18+L  4*T*C feature values, IEEE-754 binary32 little-endian,
//                 row-major by frame
//
// The declared T*C must match the payload length exactly and every value
// must be finite.
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kFeatureMagic[4] = {'T', 'S', 'L', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xFF));
    }
}

inline std::uint16_t get_u16(std::string_view in, std::size_t offset) {
    auto byte = [&](std::size_t i) {
        return static_cast<std::uint16_t>(static_cast<unsigned char>(in[offset + i]));
    };
    return static_cast<std::uint16_t>(byte(0) | (byte(1) << 8));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t offset) {
    auto byte = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i]));
    };
    return byte(0) | (byte(1) << 8) | (byte(2) << 16) | (byte(3) << 24);
}

} // namespace detail

/// Encodes a feature stream into the binary format.
inline std::string encode_features(const FeatureStream& stream) {
    if (stream.video_id().size() > 0xFFFF) {
        fail(ErrorCode::ValidationError, "video id longer than 65535 bytes");
    }
    if (stream.frames() > 0xFFFFFFFFULL || stream.channels() > 0xFFFFFFFFULL) {
        fail(ErrorCode::ValidationError, "frame or channel count exceeds u32 range");
    }
    std::string out;
    out.reserve(18 + stream.video_id().size() + stream.data().size() * 4);
    out.append(detail::kFeatureMagic, 4);
    detail::put_u32(out, detail::kFeatureVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(stream.frames()));
    detail::put_u32(out, static_cast<std::uint32_t>(stream.channels()));
    detail::put_u16(out, static_cast<std::uint16_t>(stream.video_id().size()));
    out.append(stream.video_id());
    for (float v : stream.data()) {
        detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

/// Decodes a feature stream from the binary format; the buffer must contain
/// exactly one stream with no trailing bytes.
inline FeatureStream decode_features(std::string_view buffer) {
    if (buffer.size() < 18) {
        fail(ErrorCode::LengthMismatch, "feature buffer shorter than the fixed header");
    }
    if (buffer.compare(0, 4, detail::kFeatureMagic, 4) != 0) {
        fail(ErrorCode::BadMagic, "feature buffer does not start with \"TSLF\"");
    }
    std::uint32_t version = detail::get_u32(buffer, 4);
    if (version != detail::kFeatureVersion) {
        fail(ErrorCode::VersionUnsupported,
             "feature format version " + std::to_string(version) + " unsupported");
    }
    std::uint64_t frames = detail::get_u32(buffer, 8);
    std::uint64_t channels = detail::get_u32(buffer, 12);
    std::size_t id_length = detail::get_u16(buffer, 16);
    unsigned __int128 expected =
        18 + static_cast<unsigned __int128>(id_length) +
        static_cast<unsigned __int128>(frames) * channels * 4;
    if (expected != buffer.size()) {
        fail(ErrorCode::LengthMismatch,
             "feature buffer is " + std::to_string(buffer.size()) + " bytes, expected " +
                 std::to_string(18 + id_length + frames * channels * 4) + " for " +
                 std::to_string(frames) + "x" + std::to_string(channels));
    }
    std::string video_id(buffer.substr(18, id_length));
    std::vector<float> data;
    data.reserve(frames * channels);
    std::size_t offset = 18 + id_length;
    for (std::uint64_t i = 0; i < frames * channels; ++i) {
        data.push_back(std::bit_cast<float>(detail::get_u32(buffer, offset + i * 4)));
    }
    try {
        return FeatureStream(std::move(video_id), frames, channels, std::move(data));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig) {
            fail(ErrorCode::ValidationError, std::string("feature buffer: ") + e.what());
        }
        throw;
    }
}

/// Reads one feature stream from a file.
inline FeatureStream read_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return decode_features(buffer.str());
}

/// Writes one feature stream to a file.
inline void write_features(const FeatureStream& stream, const std::filesystem::path& path) {
    write_text_file(path, encode_features(stream));
}

} // namespace tsl
