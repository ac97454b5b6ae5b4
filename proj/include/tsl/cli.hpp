#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/features.hpp"
#include "tsl/fusion.hpp"
#include "tsl/io.hpp"
#include "tsl/metrics.hpp"
#include "tsl/synthetic.hpp"

namespace tsl::cli {

/// Bad flag values (as opposed to bad file contents); mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// A decimal literal as integer mantissa + number of fraction digits, so
// threshold grids can be stepped exactly in integer space.
struct Decimal {
    std::int64_t mantissa = 0;
    int fraction_digits = 0;
};

inline Decimal parse_decimal(const std::string& text) {
    if (text.empty()) throw UsageError("empty number in threshold spec");
    Decimal d;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_dot) throw UsageError("malformed number '" + text + "'");
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            if (d.mantissa > 100000000000000LL) {
                throw UsageError("number '" + text + "' has too many digits");
            }
            d.mantissa = d.mantissa * 10 + (c - '0');
            if (seen_dot) ++d.fraction_digits;
            seen_digit = true;
        } else {
            throw UsageError("malformed number '" + text + "'");
        }
    }
    if (!seen_digit) throw UsageError("malformed number '" + text + "'");
    return d;
}

inline std::int64_t pow10(int n) {
    std::int64_t v = 1;
    for (int i = 0; i < n; ++i) v *= 10;
    return v;
}

} // namespace detail

/// Expands a "lo:hi:step" threshold grid, endpoint-inclusive, stepping in
/// exact decimal arithmetic so e.g. "0.1:0.5:0.1" yields {0.1, 0.2, 0.3,
/// 0.4, 0.5} with no floating-point drift.
inline TiouThresholds parse_threshold_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : spec) {
        if (c == ':') {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    if (parts.size() != 3) {
        throw UsageError("threshold spec must be lo:hi:step, got '" + spec + "'");
    }
    detail::Decimal lo = detail::parse_decimal(parts[0]);
    detail::Decimal hi = detail::parse_decimal(parts[1]);
    detail::Decimal step = detail::parse_decimal(parts[2]);

    int scale_digits = std::max({lo.fraction_digits, hi.fraction_digits, step.fraction_digits});
    std::int64_t scale = detail::pow10(scale_digits);
    std::int64_t lo_i = lo.mantissa * detail::pow10(scale_digits - lo.fraction_digits);
    std::int64_t hi_i = hi.mantissa * detail::pow10(scale_digits - hi.fraction_digits);
    std::int64_t step_i = step.mantissa * detail::pow10(scale_digits - step.fraction_digits);

    if (step_i <= 0) throw UsageError("threshold step must be positive");
    if (lo_i > hi_i) throw UsageError("threshold range is empty (lo > hi)");
    if ((hi_i - lo_i) / step_i + 1 > 1000) {
        throw UsageError("threshold grid has more than 1000 entries");
    }
    std::vector<double> values;
    for (std::int64_t v = lo_i; v <= hi_i; v += step_i) {
        values.push_back(static_cast<double>(v) / static_cast<double>(scale));
    }
    try {
        return TiouThresholds(std::move(values));
    } catch (const Error& e) {
        throw UsageError(std::string("invalid threshold grid: ") + e.what());
    }
}

/// Parses a comma-separated weight list ("1,1,2.5").
inline std::vector<double> parse_weights(const std::string& csv) {
    std::vector<double> weights;
    std::string current;
    std::istringstream in(csv);
    while (std::getline(in, current, ',')) {
        try {
            std::size_t used = 0;
            double w = std::stod(current, &used);
            if (used != current.size()) throw std::invalid_argument(current);
            weights.push_back(w);
        } catch (const std::exception&) {
            throw UsageError("malformed weight '" + current + "'");
        }
    }
    if (weights.empty()) throw UsageError("empty weight list");
    return weights;
}

inline RescaleMode parse_rescale_mode(const std::string& name) {
    if (name == "none") return RescaleMode::none;
    if (name == "by_count") return RescaleMode::by_count;
    if (name == "by_count_clamped") return RescaleMode::by_count_clamped;
    throw UsageError("unknown rescale mode '" + name +
                     "' (expected one of: none, by_count, by_count_clamped)");
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// Machine-readable evaluation report. Stable key order and shortest
/// round-trip float formatting make the output byte-reproducible.
inline std::string render_report_json(const EvalReport& report, const Vocabulary& vocabulary) {
    nlohmann::json doc;
    doc["thresholds"] = report.thresholds;
    doc["overall_map"] = report.overall_map;
    doc["per_threshold_map"] = report.per_threshold_map;
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < vocabulary.size(); ++c) {
        nlohmann::json entry;
        entry["name"] = vocabulary.names()[c];
        entry["ground_truth"] = report.counts[c].ground_truth;
        entry["detections"] = report.counts[c].detections;
        nlohmann::json ap = nlohmann::json::array();
        for (const auto& value : report.per_class_ap[c]) {
            if (value) {
                ap.push_back(*value);
            } else {
                ap.push_back(nullptr);
            }
        }
        entry["ap"] = std::move(ap);
        classes.push_back(std::move(entry));
    }
    doc["classes"] = std::move(classes);
    return doc.dump(2) + "\n";
}

/// Aligned human-readable table for reading results offline.
inline std::string render_report_pretty(const EvalReport& report, const Vocabulary& vocabulary) {
    std::ostringstream out;
    std::size_t name_width = 5;
    for (const std::string& name : vocabulary.names()) {
        name_width = std::max(name_width, name.size());
    }
    auto cell = [](double v) {
        char buffer[16];
        std::snprintf(buffer, sizeof(buffer), "%8.4f", v);
        return std::string(buffer);
    };

    out << std::string(name_width, ' ') << "      gt    dets";
    for (double t : report.thresholds) {
        char buffer[16];
        std::snprintf(buffer, sizeof(buffer), "  AP@%.2f", t);
        out << buffer;
    }
    out << "\n";
    for (std::size_t c = 0; c < vocabulary.size(); ++c) {
        const std::string& name = vocabulary.names()[c];
        out << name << std::string(name_width - name.size(), ' ');
        char buffer[32];
        std::snprintf(buffer, sizeof(buffer), "  %6zu  %6zu", report.counts[c].ground_truth,
                      report.counts[c].detections);
        out << buffer;
        for (const auto& ap : report.per_class_ap[c]) {
            out << (ap ? cell(*ap) : "       -");
        }
        out << "\n";
    }
    out << std::string(name_width, ' ') << "   mAP per threshold:";
    for (double v : report.per_threshold_map) out << cell(v);
    out << "\n";
    out << "overall mAP: ";
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%.4f", report.overall_map);
    out << buffer << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Subcommand runners. Each is a thin wrapper over the library operations so
// CLI behavior and library behavior cannot drift apart.
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    std::filesystem::path gt;
    std::filesystem::path pred;
    std::string thresholds = "0.1:0.5:0.1";
    int jobs = 1;
    bool pretty = false;
};

inline std::string run_evaluate(const EvaluateOptions& options) {
    TiouThresholds grid = parse_threshold_grid(options.thresholds);
    DetectionFileData gt_file = read_detections(options.gt);
    DetectionFileData pred_file = read_detections(options.pred);
    if (!(gt_file.vocabulary == pred_file.vocabulary)) {
        fail(ErrorCode::ValidationError,
             "ground-truth and prediction vocabularies differ");
    }
    EvalReport report = evaluate(pred_file.as_detection_sets(), gt_file.as_event_sets(),
                                 gt_file.vocabulary, grid, options.jobs);
    return options.pretty ? render_report_pretty(report, gt_file.vocabulary)
                          : render_report_json(report, gt_file.vocabulary);
}

struct FuseOptions {
    std::vector<std::filesystem::path> inputs;
    std::string weights; // empty = equal weights
    double cluster_tiou = 0.55;
    std::string rescale = "by_count_clamped";
    double score_floor = 0.0;
    int jobs = 1;
    std::filesystem::path out;
};

inline void run_fuse(const FuseOptions& options) {
    FusionConfig config;
    if (!options.weights.empty()) config.weights = parse_weights(options.weights);
    config.cluster_tiou = options.cluster_tiou;
    config.rescale_mode = parse_rescale_mode(options.rescale);
    config.score_floor = options.score_floor;

    std::vector<ModelPredictions> models;
    Vocabulary vocabulary;
    for (std::size_t i = 0; i < options.inputs.size(); ++i) {
        DetectionFileData file = read_detections(options.inputs[i]);
        if (i == 0) {
            vocabulary = file.vocabulary;
        } else if (!(file.vocabulary == vocabulary)) {
            fail(ErrorCode::ValidationError,
                 "input '" + options.inputs[i].string() + "' has a different vocabulary");
        }
        models.push_back({options.inputs[i].string(), file.as_detection_sets()});
    }
    std::vector<DetectionSet> fused = fuse_dataset(models, config, options.jobs);
    write_detections(options.out, vocabulary, fused);
}

struct NmsOptions {
    std::filesystem::path input;
    double tiou_threshold = 0.5;
    std::filesystem::path out;
};

inline void run_nms(const NmsOptions& options) {
    DetectionFileData file = read_detections(options.input);
    std::vector<DetectionSet> suppressed;
    for (const DetectionSet& set : file.as_detection_sets()) {
        suppressed.push_back(nms_1d(set, options.tiou_threshold));
    }
    write_detections(options.out, file.vocabulary, suppressed);
}

struct AlignOptions {
    std::filesystem::path video;
    std::vector<std::filesystem::path> audio;
    std::filesystem::path out;
};

inline void run_align(const AlignOptions& options) {
    FeatureStream video = read_features(options.video);
    std::vector<FeatureStream> audio_parts;
    for (const auto& path : options.audio) audio_parts.push_back(read_features(path));
    write_features(align_and_fuse(video, audio_parts), options.out);
}

struct ConcatOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out;
};

inline void run_concat(const ConcatOptions& options) {
    std::vector<FeatureStream> streams;
    for (const auto& path : options.inputs) streams.push_back(read_features(path));
    write_features(concat_channels(streams), options.out);
}

struct SynthOptions {
    SynthConfig synth;
    NoiseConfig noise;
    std::uint64_t noise_seed = 1;
    std::filesystem::path out_gt;
    std::vector<std::filesystem::path> out_dets;
};

/// Generates a synthetic dataset: ground truth plus one simulated detector
/// per --out-dets path. Detector i uses noise seed derive_seed(noise_seed, i).
inline void run_synth(const SynthOptions& options) {
    Vocabulary vocabulary = synth_vocabulary(options.synth.n_classes);
    std::vector<EventSet> gt = gen_ground_truth(options.synth);
    write_events(options.out_gt, vocabulary, gt);
    for (std::size_t i = 0; i < options.out_dets.size(); ++i) {
        NoiseConfig noise = options.noise;
        noise.seed = derive_seed(options.noise_seed, i);
        write_detections(options.out_dets[i], vocabulary, simulate_detector(gt, noise));
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Full argv-level entry point. Exit codes: 0 success, 1 validation or data
/// error (diagnostic on stderr), 2 usage error.
inline int run_main(int argc, const char* const* argv) {
    CLI::App app{"Temporal sound localisation toolkit: evaluation, interval "
                 "WBF ensembling, feature alignment, synthetic benchmarks"};
    app.require_subcommand(1);

    EvaluateOptions evaluate_options;
    CLI::App* evaluate_cmd =
        app.add_subcommand("evaluate", "Score predictions against ground truth (mAP)");
    evaluate_cmd->add_option("--gt", evaluate_options.gt, "ground-truth JSON file")->required();
    evaluate_cmd->add_option("--pred", evaluate_options.pred, "prediction JSON file")->required();
    evaluate_cmd->add_option("--thresholds", evaluate_options.thresholds,
                             "tIoU grid as lo:hi:step (default 0.1:0.5:0.1)");
    evaluate_cmd->add_option("--jobs", evaluate_options.jobs, "worker threads");
    evaluate_cmd->add_flag("--pretty", evaluate_options.pretty, "human-readable table");

    FuseOptions fuse_options;
    CLI::App* fuse_cmd = app.add_subcommand("fuse", "Ensemble detection files with interval WBF");
    fuse_cmd->add_option("--inputs", fuse_options.inputs, "per-model detection JSON files")
        ->required()
        ->expected(-1);
    fuse_cmd->add_option("--weights", fuse_options.weights,
                         "comma-separated per-model weights (default: equal)");
    fuse_cmd->add_option("--cluster-tiou", fuse_options.cluster_tiou,
                         "cluster tIoU threshold (default 0.55)");
    fuse_cmd->add_option("--rescale", fuse_options.rescale,
                         "none | by_count | by_count_clamped (default by_count_clamped)");
    fuse_cmd->add_option("--score-floor", fuse_options.score_floor,
                         "drop fused detections scoring below this (default 0)");
    fuse_cmd->add_option("--jobs", fuse_options.jobs, "worker threads");
    fuse_cmd->add_option("--out", fuse_options.out, "output detection JSON file")->required();

    NmsOptions nms_options;
    CLI::App* nms_cmd = app.add_subcommand("nms", "Greedy temporal non-maximum suppression");
    nms_cmd->add_option("--input", nms_options.input, "detection JSON file")->required();
    nms_cmd->add_option("--tiou-threshold", nms_options.tiou_threshold, "suppression threshold")
        ->required();
    nms_cmd->add_option("--out", nms_options.out, "output detection JSON file")->required();

    AlignOptions align_options;
    CLI::App* align_cmd =
        app.add_subcommand("align", "Resample audio features to the video timeline and fuse");
    align_cmd->add_option("--video", align_options.video, "video feature file")->required();
    align_cmd->add_option("--audio", align_options.audio, "audio feature files")
        ->required()
        ->expected(-1);
    align_cmd->add_option("--out", align_options.out, "output feature file")->required();

    ConcatOptions concat_options;
    CLI::App* concat_cmd =
        app.add_subcommand("concat", "Concatenate feature streams along channels");
    concat_cmd->add_option("--inputs", concat_options.inputs, "input feature files")
        ->required()
        ->expected(-1);
    concat_cmd->add_option("--out", concat_options.out, "output feature file")->required();

    SynthOptions synth_options;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate synthetic ground truth and noisy detectors");
    synth_cmd->add_option("--seed", synth_options.synth.seed, "ground-truth seed");
    synth_cmd->add_option("--noise-seed", synth_options.noise_seed,
                          "base seed for detector noise (detector i uses substream i)");
    synth_cmd->add_option("--videos", synth_options.synth.n_videos, "number of videos");
    synth_cmd->add_option("--classes", synth_options.synth.n_classes, "number of classes");
    synth_cmd->add_option("--events-per-video", synth_options.synth.events_per_video,
                          "events per video");
    synth_cmd->add_option("--duration", synth_options.synth.video_duration,
                          "video duration in seconds");
    synth_cmd->add_option("--min-event-dur", synth_options.synth.min_event_duration,
                          "minimum event duration");
    synth_cmd->add_option("--max-event-dur", synth_options.synth.max_event_duration,
                          "maximum event duration");
    synth_cmd->add_option("--jitter-std", synth_options.noise.boundary_jitter_std,
                          "boundary jitter stddev in seconds");
    synth_cmd->add_option("--drop-prob", synth_options.noise.drop_prob,
                          "probability of dropping a GT event");
    synth_cmd->add_option("--fp-rate", synth_options.noise.fp_rate,
                          "expected false positives per video");
    synth_cmd->add_option("--score-noise-std", synth_options.noise.score_noise_std,
                          "score noise stddev");
    synth_cmd->add_option("--out-gt", synth_options.out_gt, "output ground-truth file")
        ->required();
    synth_cmd->add_option("--out-dets", synth_options.out_dets,
                          "output detection files, one per simulated detector")
        ->expected(-1);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                // --help and friends
                app.exit(e);
                return 0;
            }
            std::cerr << "usage error: " << e.what() << "\n";
            return 2;
        }

        if (evaluate_cmd->parsed()) {
            std::cout << run_evaluate(evaluate_options);
        } else if (fuse_cmd->parsed()) {
            run_fuse(fuse_options);
        } else if (nms_cmd->parsed()) {
            run_nms(nms_options);
        } else if (align_cmd->parsed()) {
            run_align(align_options);
        } else if (concat_cmd->parsed()) {
            run_concat(concat_options);
        } else if (synth_cmd->parsed()) {
            run_synth(synth_options);
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace tsl::cli
