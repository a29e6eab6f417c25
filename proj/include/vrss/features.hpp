#pragma once

#include <vector>

#include <Eigen/Core>

#include "vrss/telemetry.hpp"

namespace vrss {

constexpr int kFeatureDim = 5;

// The 5-dimensional kinematic feature vector at one timestamp:
//   [0] a_eye_l     gaze-direction acceleration magnitude, left eye (1/s^2)
//   [1] a_eye_r     same, right eye
//   [2] v_char      character speed (m/s)
//   [3] a_char      character acceleration magnitude (m/s^2)
//   [4] alpha_char  character angular acceleration magnitude (rad/s^2)
struct FeatureFrame {
    double t = 0.0;
    double a_eye_l = 0.0;
    double a_eye_r = 0.0;
    double v_char = 0.0;
    double a_char = 0.0;
    double alpha_char = 0.0;
    bool valid = true;  // false inside long blinks or near data gaps

    double operator[](int i) const {
        switch (i) {
            case 0: return a_eye_l;
            case 1: return a_eye_r;
            case 2: return v_char;
            case 3: return a_char;
            default: return alpha_char;
        }
    }
    void set(int i, double v) {
        switch (i) {
            case 0: a_eye_l = v; break;
            case 1: a_eye_r = v; break;
            case 2: v_char = v; break;
            case 3: a_char = v; break;
            default: alpha_char = v; break;
        }
    }
};

// Per-feature normalization statistics, computed on training data only and
// stored with the model that used them.
struct NormStats {
    Eigen::Matrix<double, kFeatureDim, 1> mean = Eigen::Matrix<double, kFeatureDim, 1>::Zero();
    Eigen::Matrix<double, kFeatureDim, 1> std = Eigen::Matrix<double, kFeatureDim, 1>::Ones();
};

enum class BlinkEye { Left, Right, Both };

struct BlinkInterval {
    double start = 0.0;
    double end = 0.0;  // [start, end)
    BlinkEye eye = BlinkEye::Both;
};

// A fixed-length slice of consecutive feature frames, the model input unit.
struct Window {
    Eigen::MatrixXd features;  // L x 5
    double t_end = 0.0;        // timestamp of the last row
    double valid_fraction = 1.0;
    bool last_valid = true;    // validity of the final frame
    std::size_t start_index = 0;
};

/// Second central difference a_t = (x[t+1] - 2 x[t] + x[t-1]) / dt^2.
/// Endpoints copy the nearest interior value. Requires >= 3 samples.
std::vector<Vec3> second_central_difference(const std::vector<Vec3>& series, double dt);

/// First central difference v_t = (x[t+1] - x[t-1]) / (2 dt), endpoints copied.
std::vector<Vec3> first_central_difference(const std::vector<Vec3>& series, double dt);

/// Derives the 5-dim feature stream from aligned frames. Frames whose
/// difference stencil touches a gap interval come back with valid=false
/// (values still computed; hold them with apply_feature_hold).
std::vector<FeatureFrame> extract_features(const std::vector<Frame>& frames, double rate_hz,
                                           const std::vector<TimeInterval>& gap_intervals = {});

struct BlinkParams {
    double openness_threshold = 0.15;
    double min_duration_s = 0.3;  // shorter dips are ordinary blinks, not "long" ones
};

/// Maximal per-eye intervals with openness below threshold lasting at least
/// min_duration_s; overlapping left/right intervals merge into Both.
std::vector<BlinkInterval> detect_blinks(const std::vector<Frame>& frames, double rate_hz,
                                         const BlinkParams& params = {});

/// Marks frames inside Both-eye blinks invalid and zero-order-holds every
/// invalid frame's feature values at the last valid value, so window shapes
/// stay fixed while blink/gap content cannot masquerade as motion.
void apply_feature_hold(std::vector<FeatureFrame>& features,
                        const std::vector<BlinkInterval>& blinks);

/// Per-dimension mean and population standard deviation over valid frames.
/// Requires >= 2 valid frames.
NormStats compute_norm_stats(const std::vector<FeatureFrame>& features);

/// x' = (x - mean) / max(std, 1e-8), validity preserved.
std::vector<FeatureFrame> normalize(const std::vector<FeatureFrame>& features,
                                    const NormStats& stats);

std::vector<FeatureFrame> denormalize(const std::vector<FeatureFrame>& features,
                                      const NormStats& stats);

/// Windows starting at indices 0, S, 2S, ...; empty result when the sequence
/// is shorter than the window.
std::vector<Window> make_windows(const std::vector<FeatureFrame>& features,
                                 std::size_t window_len, std::size_t stride);

}  // namespace vrss
