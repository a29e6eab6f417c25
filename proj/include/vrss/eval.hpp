#pragma once

#include <string>
#include <vector>

#include "vrss/detector.hpp"
#include "vrss/labeling.hpp"
#include "vrss/lstm.hpp"
#include "vrss/telemetry.hpp"

namespace vrss {

struct EvalConfig {
    int window_len = 120;
    int stride = 15;
    double min_valid_fraction = kMinValidFraction;
    double pre_ss_len_s = kDefaultPreSsLenS;
    BlinkParams blink;
    // Event matching: a Raised counts as a hit for an episode when its t lies
    // in [pause_start - pre_ss_len_s - hit_lead_s, pause_end]. The lead
    // tolerates hysteresis confirmation delay.
    double hit_lead_s = 1.0;
    // Hysteresis settings for the event-level replay.
    int raise_count = 3;
    int clear_count = 8;
    double theta_raise = 0.7;
    double theta_clear = 0.5;
};

struct ClassMetrics {
    int label = 0;  // event label this class index stands for
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EventMetrics {
    std::size_t episodes = 0;
    std::size_t hits = 0;
    std::size_t total_raises = 0;
    double hit_rate = 0.0;       // hits / episodes
    double false_per_min = 0.0;  // (total_raises - hits) per minute of data
    double mean_latency_s = 0.0;  // over hits, t_raised - pause_start; negative = early
};

struct Metrics {
    std::vector<int> class_labels;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<ClassMetrics> per_class;
    double balanced_accuracy = 0.0;  // mean recall over classes present
    std::size_t windows = 0;
    EventMetrics events;
    double duration_min = 0.0;
};

// Overall metrics plus the same breakdown per perspective present in the data.
struct EvalReport {
    ModelProfile profile = ModelProfile::A;
    double hit_lead_s = 1.0;
    Metrics overall;
    std::vector<std::pair<Perspective, Metrics>> by_perspective;
};

/// Offline evaluation: frame-level confusion over usable windows whose final
/// label the model distinguishes, plus an event-level detector replay with
/// greedy raise-to-episode matching. Deterministic.
EvalReport evaluate(const Model& model, const std::vector<Session>& sessions,
                    const EvalConfig& cfg = {});

enum class ReportFormat { Text, Csv };

/// Text: confusion matrix, per-class table, event block, per-perspective
/// sections, 4 decimal places. Csv: one name,value row per metric with
/// round-trip-exact numbers.
std::string render_report(const EvalReport& report, ReportFormat format);

}  // namespace vrss
