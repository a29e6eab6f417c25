#pragma once

#include <iosfwd>
#include <vector>

#include "vrss/features.hpp"
#include "vrss/telemetry.hpp"

namespace vrss {

constexpr double kDefaultPreSsLenS = 6.0;

// Per-frame event labels plus the validity mask that keeps long blinks out of
// training and detection.
struct LabeledSeries {
    std::vector<EventLabel> labels;
    std::vector<bool> validity;
};

/// Assigns the per-frame event label: 2 inside a pause, 1 in the
/// pre_ss_len_s window before a pause start, 0 otherwise. Precedence 2 > 1 > 0,
/// so pre-onset windows truncate at session start and at earlier pauses.
std::vector<EventLabel> label_frames(const std::vector<double>& timestamps,
                                     const std::vector<TimeInterval>& pauses,
                                     double pre_ss_len_s = kDefaultPreSsLenS);

/// Marks frames inside Both-eye blink intervals invalid. Labels are retained;
/// downstream consumers exclude invalid frames from positive-class training
/// windows and suppress detector raises on them.
LabeledSeries apply_blink_countermeasure(const std::vector<double>& timestamps,
                                         const std::vector<EventLabel>& labels,
                                         const std::vector<BlinkInterval>& blinks);

/// CSV export: header row then t,label,valid,a_eye_l,a_eye_r,a_char,v_char,alpha_char.
void write_labeled_csv(std::ostream& out, const std::vector<FeatureFrame>& features,
                       const LabeledSeries& series);

// Window usability for training: positive-class windows (labels 1 and 2) need
// a valid final frame and at least min_valid_fraction valid rows; class-0
// windows need only a valid final frame.
constexpr double kMinValidFraction = 0.8;

bool window_usable(const Window& w, EventLabel final_label,
                   double min_valid_fraction = kMinValidFraction);

}  // namespace vrss
