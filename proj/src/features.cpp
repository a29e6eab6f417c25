#include "vrss/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrss {

std::vector<Vec3> second_central_difference(const std::vector<Vec3>& series, double dt) {
    if (series.size() < 3) throw std::runtime_error("second_central_difference needs >= 3 samples");
    if (dt <= 0.0) throw std::runtime_error("dt must be positive");
    const std::size_t n = series.size();
    std::vector<Vec3> out(n);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (std::size_t t = 1; t + 1 < n; ++t)
        out[t] = (series[t + 1] - series[t] * 2.0 + series[t - 1]) * inv_dt2;
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    return out;
}

std::vector<Vec3> first_central_difference(const std::vector<Vec3>& series, double dt) {
    if (series.size() < 3) throw std::runtime_error("first_central_difference needs >= 3 samples");
    if (dt <= 0.0) throw std::runtime_error("dt must be positive");
    const std::size_t n = series.size();
    std::vector<Vec3> out(n);
    const double inv_2dt = 1.0 / (2.0 * dt);
    for (std::size_t t = 1; t + 1 < n; ++t) out[t] = (series[t + 1] - series[t - 1]) * inv_2dt;
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    return out;
}

std::vector<FeatureFrame> extract_features(const std::vector<Frame>& frames, double rate_hz,
                                           const std::vector<TimeInterval>& gap_intervals) {
    const std::size_t n = frames.size();
    if (n < 3) throw std::runtime_error("extract_features needs >= 3 frames");
    if (rate_hz <= 0.0) throw std::runtime_error("rate_hz must be positive");
    const double dt = 1.0 / rate_hz;

    std::vector<Vec3> gaze_l(n), gaze_r(n), pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        gaze_l[i] = frames[i].eye.gaze_l;
        gaze_r[i] = frames[i].eye.gaze_r;
        pos[i] = frames[i].character.pos;
    }

    const std::vector<Vec3> a_l = second_central_difference(gaze_l, dt);
    const std::vector<Vec3> a_r = second_central_difference(gaze_r, dt);
    const std::vector<Vec3> vel = first_central_difference(pos, dt);
    const std::vector<Vec3> acc = second_central_difference(pos, dt);

    // Angular speed lives on half steps: omega[t] is the rotation rate between
    // frames t and t+1. The difference (omega[t] - omega[t-1]) / dt is then a
    // derivative centered on frame t, needing only one frame of lookahead.
    std::vector<double> omega(n, 0.0);
    for (std::size_t t = 0; t + 1 < n; ++t)
        omega[t] = rotation_angle(frames[t].character.quat, frames[t + 1].character.quat) * rate_hz;
    omega[n - 1] = omega[n - 2];

    std::vector<double> alpha(n, 0.0);
    for (std::size_t t = 1; t + 1 < n; ++t) alpha[t] = std::fabs(omega[t] - omega[t - 1]) * rate_hz;
    alpha[0] = alpha[1];
    alpha[n - 1] = alpha[n - 2];

    std::vector<FeatureFrame> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        FeatureFrame& f = out[i];
        f.t = frames[i].t;
        f.a_eye_l = a_l[i].norm();
        f.a_eye_r = a_r[i].norm();
        f.v_char = vel[i].norm();
        f.a_char = acc[i].norm();
        f.alpha_char = alpha[i];
        f.valid = true;
    }

    // A frame is invalid when its stencil [t-1, t+1] touches a source gap.
    if (!gap_intervals.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = frames[i > 0 ? i - 1 : 0].t;
            const double hi = frames[std::min(i + 1, n - 1)].t;
            for (const TimeInterval& g : gap_intervals) {
                if (lo < g.end && hi > g.start) {
                    out[i].valid = false;
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<BlinkInterval> detect_blinks(const std::vector<Frame>& frames, double rate_hz,
                                         const BlinkParams& params) {
    if (!(params.openness_threshold > 0.0 && params.openness_threshold < 1.0))
        throw std::runtime_error("openness_threshold must be in (0,1)");
    if (!(params.min_duration_s > 0.0)) throw std::runtime_error("min_duration_s must be positive");

    const std::size_t n = frames.size();
    const double dt = 1.0 / rate_hz;
    const std::size_t min_frames =
        static_cast<std::size_t>(std::ceil(params.min_duration_s * rate_hz - 1e-9));

    auto runs_for_eye = [&](bool left) {
        std::vector<BlinkInterval> runs;
        std::size_t run_start = 0;
        std::size_t run_len = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            const bool below =
                i < n && (left ? frames[i].eye.open_l : frames[i].eye.open_r) <
                             params.openness_threshold;
            if (below) {
                if (run_len == 0) run_start = i;
                ++run_len;
            } else if (run_len > 0) {
                if (run_len >= min_frames) {
                    const double start = frames[run_start].t;
                    const double end =
                        (i < n) ? frames[i].t : frames[n - 1].t + dt;
                    runs.push_back({start, end, left ? BlinkEye::Left : BlinkEye::Right});
                }
                run_len = 0;
            }
        }
        return runs;
    };

    std::vector<BlinkInterval> all = runs_for_eye(true);
    const std::vector<BlinkInterval> right = runs_for_eye(false);
    all.insert(all.end(), right.begin(), right.end());
    std::sort(all.begin(), all.end(), [](const BlinkInterval& a, const BlinkInterval& b) {
        return a.start < b.start;
    });

    // Merge overlapping intervals; any merge across eyes becomes Both.
    std::vector<BlinkInterval> merged;
    for (const BlinkInterval& b : all) {
        if (!merged.empty() && b.start < merged.back().end) {
            BlinkInterval& m = merged.back();
            m.end = std::max(m.end, b.end);
            if (m.eye != b.eye) m.eye = BlinkEye::Both;
        } else {
            merged.push_back(b);
        }
    }
    return merged;
}

void apply_feature_hold(std::vector<FeatureFrame>& features,
                        const std::vector<BlinkInterval>& blinks) {
    for (FeatureFrame& f : features) {
        for (const BlinkInterval& b : blinks) {
            if (b.eye == BlinkEye::Both && f.t >= b.start && f.t < b.end) {
                f.valid = false;
                break;
            }
        }
    }

    // Zero-order hold over invalid frames; leading invalid frames backfill
    // from the first valid one.
    const FeatureFrame* last_valid = nullptr;
    for (FeatureFrame& f : features)
        if (f.valid) {
            last_valid = &f;
            break;
        }
    if (!last_valid) return;  // nothing valid to hold from

    for (FeatureFrame& f : features) {
        if (f.valid) {
            last_valid = &f;
        } else {
            for (int d = 0; d < kFeatureDim; ++d) f.set(d, (*last_valid)[d]);
        }
    }
}

NormStats compute_norm_stats(const std::vector<FeatureFrame>& features) {
    Eigen::Matrix<double, kFeatureDim, 1> sum = Eigen::Matrix<double, kFeatureDim, 1>::Zero();
    Eigen::Matrix<double, kFeatureDim, 1> sumsq = Eigen::Matrix<double, kFeatureDim, 1>::Zero();
    std::size_t count = 0;
    for (const FeatureFrame& f : features) {
        if (!f.valid) continue;
        for (int d = 0; d < kFeatureDim; ++d) {
            sum[d] += f[d];
            sumsq[d] += f[d] * f[d];
        }
        ++count;
    }
    if (count < 2) throw std::runtime_error("compute_norm_stats needs >= 2 valid frames");

    NormStats stats;
    const double n = static_cast<double>(count);
    stats.mean = sum / n;
    for (int d = 0; d < kFeatureDim; ++d) {
        const double var = std::max(0.0, sumsq[d] / n - stats.mean[d] * stats.mean[d]);
        stats.std[d] = std::sqrt(var);
    }
    return stats;
}

std::vector<FeatureFrame> normalize(const std::vector<FeatureFrame>& features,
                                    const NormStats& stats) {
    std::vector<FeatureFrame> out = features;
    for (FeatureFrame& f : out)
        for (int d = 0; d < kFeatureDim; ++d)
            f.set(d, (f[d] - stats.mean[d]) / std::max(stats.std[d], 1e-8));
    return out;
}

std::vector<FeatureFrame> denormalize(const std::vector<FeatureFrame>& features,
                                      const NormStats& stats) {
    std::vector<FeatureFrame> out = features;
    for (FeatureFrame& f : out)
        for (int d = 0; d < kFeatureDim; ++d)
            f.set(d, f[d] * std::max(stats.std[d], 1e-8) + stats.mean[d]);
    return out;
}

std::vector<Window> make_windows(const std::vector<FeatureFrame>& features,
                                 std::size_t window_len, std::size_t stride) {
    if (window_len < 1 || stride < 1) throw std::runtime_error("window_len and stride must be >= 1");
    std::vector<Window> out;
    if (features.size() < window_len) return out;

    for (std::size_t start = 0; start + window_len <= features.size(); start += stride) {
        Window w;
        w.start_index = start;
        w.features.resize(static_cast<Eigen::Index>(window_len), kFeatureDim);
        std::size_t valid_count = 0;
        for (std::size_t i = 0; i < window_len; ++i) {
            const FeatureFrame& f = features[start + i];
            for (int d = 0; d < kFeatureDim; ++d)
                w.features(static_cast<Eigen::Index>(i), d) = f[d];
            if (f.valid) ++valid_count;
        }
        const FeatureFrame& last = features[start + window_len - 1];
        w.t_end = last.t;
        w.last_valid = last.valid;
        w.valid_fraction = static_cast<double>(valid_count) / static_cast<double>(window_len);
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace vrss
