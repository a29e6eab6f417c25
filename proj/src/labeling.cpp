#include "vrss/labeling.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace vrss {

std::vector<EventLabel> label_frames(const std::vector<double>& timestamps,
                                     const std::vector<TimeInterval>& pauses,
                                     double pre_ss_len_s) {
    if (!(pre_ss_len_s > 0.0)) throw std::runtime_error("pre_ss_len_s must be positive");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (!(timestamps[i] > timestamps[i - 1]))
            throw std::runtime_error("timestamps must be strictly increasing");
    for (std::size_t i = 0; i < pauses.size(); ++i) {
        if (!(pauses[i].end > pauses[i].start))
            throw std::runtime_error("pause intervals must have end > start");
        if (i > 0 && pauses[i].start < pauses[i - 1].end)
            throw std::runtime_error("pause intervals must be sorted and non-overlapping");
    }

    std::vector<EventLabel> labels(timestamps.size(), EventLabel::Normal);

    // Sweep pauses once; precedence 2 > 1 > 0 means a later pass for label 2
    // overwrites any pre-onset label from an adjacent window.
    for (const TimeInterval& p : pauses) {
        const double lead_start = p.start - pre_ss_len_s;
        auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), lead_start);
        auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), p.start);
        for (auto it = lo; it != hi; ++it)
            labels[static_cast<std::size_t>(it - timestamps.begin())] = EventLabel::PreSS;
    }
    for (const TimeInterval& p : pauses) {
        auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), p.start);
        auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), p.end);
        for (auto it = lo; it != hi; ++it)
            labels[static_cast<std::size_t>(it - timestamps.begin())] = EventLabel::Paused;
    }
    return labels;
}

LabeledSeries apply_blink_countermeasure(const std::vector<double>& timestamps,
                                         const std::vector<EventLabel>& labels,
                                         const std::vector<BlinkInterval>& blinks) {
    if (timestamps.size() != labels.size())
        throw std::runtime_error("timestamps and labels must have the same length");

    LabeledSeries s;
    s.labels = labels;
    s.validity.assign(labels.size(), true);
    for (const BlinkInterval& b : blinks) {
        if (b.eye != BlinkEye::Both) continue;  // single-eye dropouts are tracker noise
        auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), b.start);
        auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), b.end);
        for (auto it = lo; it != hi; ++it)
            s.validity[static_cast<std::size_t>(it - timestamps.begin())] = false;
    }
    return s;
}

void write_labeled_csv(std::ostream& out, const std::vector<FeatureFrame>& features,
                       const LabeledSeries& series) {
    if (features.size() != series.labels.size())
        throw std::runtime_error("features and labels must have the same length");

    out << "t,label,valid,a_eye_l,a_eye_r,a_char,v_char,alpha_char\n";
    out.precision(17);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const FeatureFrame& f = features[i];
        out << f.t << ',' << static_cast<int>(series.labels[i]) << ','
            << (series.validity[i] ? 1 : 0) << ',' << f.a_eye_l << ',' << f.a_eye_r << ','
            << f.a_char << ',' << f.v_char << ',' << f.alpha_char << '\n';
    }
}

bool window_usable(const Window& w, EventLabel final_label, double min_valid_fraction) {
    if (!w.last_valid) return false;
    if (final_label == EventLabel::Normal) return true;
    return w.valid_fraction >= min_valid_fraction;
}

}  // namespace vrss
