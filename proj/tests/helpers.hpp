#pragma once

// Shared fixtures for the test suites: hand-built sessions, an offline
// replica of the detection pipeline (independent of the streaming Detector),
// and a minimal blocking TCP client.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "vrss/detector.hpp"
#include "vrss/features.hpp"
#include "vrss/labeling.hpp"
#include "vrss/lstm.hpp"
#include "vrss/synthgen.hpp"
#include "vrss/telemetry.hpp"

namespace vrss::testing {

inline Vec3 unit_gaze(double yaw, double pitch) {
    return {std::sin(yaw) * std::cos(pitch), std::sin(pitch), std::cos(yaw) * std::cos(pitch)};
}

// A session of n frames at rate_hz with still gaze and pose; tests mutate
// individual frames afterwards.
inline Session still_session(std::size_t n, double rate_hz = 60.0) {
    Session s;
    s.session_id = "still";
    s.rate_hz = rate_hz;
    s.frames.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Frame& f = s.frames[i];
        f.t = static_cast<double>(i) / rate_hz;
        f.eye.t = f.t;
        f.eye.gaze_l = unit_gaze(-0.02, 0.0);
        f.eye.gaze_r = unit_gaze(0.02, 0.0);
        f.eye.gaze_c = unit_gaze(0.0, 0.0);
        f.eye.open_l = f.eye.open_r = 1.0;
        f.eye.pupil_l = f.eye.pupil_r = 3.0;
        f.character.t = f.t;
        f.character.pos = {0.0, 1.7, 0.0};
        f.character.quat = {1.0, 0.0, 0.0, 0.0};
    }
    return s;
}

// Closes both eyes over [start_s, start_s + len_s) relative to frame times.
inline void inject_blink(Session& s, double start_s, double len_s, double openness = 0.05) {
    for (Frame& f : s.frames)
        if (f.t >= start_s && f.t < start_s + len_s) f.eye.open_l = f.eye.open_r = openness;
}

// A model with random weights but meaningful normalization stats, so detector
// tests exercise real probability trajectories without a training run. The
// output head is randomized too (init_params leaves it zero, which would pin
// every probability at 0.5).
inline Model random_model(ModelProfile profile, std::uint64_t seed, int hidden,
                          const NormStats& norm) {
    Model m;
    m.params = init_params(kFeatureDim, hidden, 2, seed);
    std::mt19937_64 rng(seed ^ 0xabcdef12345678ull);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    for (Eigen::Index r = 0; r < m.params.W_out.rows(); ++r)
        for (Eigen::Index c = 0; c < m.params.W_out.cols(); ++c) m.params.W_out(r, c) = dist(rng);
    for (Eigen::Index i = 0; i < m.params.b_out.size(); ++i) m.params.b_out[i] = dist(rng);
    m.profile = profile;
    m.norm = norm;
    m.class_labels = profile == ModelProfile::A ? std::vector<int>{0, 2} : std::vector<int>{0, 1};
    return m;
}

// Offline replica of the streaming detector: the full batch pipeline
// (features, blinks, hold, normalize, windows) followed by the same gating
// rule. Deliberately built from the offline building blocks only.
inline std::vector<DetectionEvent> offline_events(const std::vector<Model>& models,
                                                  const Session& s, const DetectorConfig& cfg) {
    auto feats = extract_features(s.frames, s.rate_hz, s.gap_intervals);
    const auto blinks = detect_blinks(s.frames, s.rate_hz, cfg.blink);
    apply_feature_hold(feats, blinks);

    struct Gate {
        const Model* model;
        HysteresisGate gate;
    };
    std::vector<Gate> gates;
    for (const Model& m : models)
        gates.push_back(
            {&m, HysteresisGate(cfg.raise_count, cfg.clear_count, cfg.theta_raise, cfg.theta_clear)});

    std::vector<DetectionEvent> events;
    for (Gate& g : gates) {
        const auto normed = normalize(feats, g.model->norm);
        const auto windows =
            make_windows(normed, static_cast<std::size_t>(cfg.window_len),
                         static_cast<std::size_t>(cfg.stride));
        std::vector<DetectionEvent> own;
        for (const Window& w : windows) {
            // Counter-measure: windows ending inside a long blink never reach
            // the gate (the streaming side drops those inferences entirely).
            if (!w.last_valid) continue;
            const auto probs = sequence_forward(g.model->params, w.features);
            const double p = probs[1];
            if (auto kind = g.gate.update(p)) {
                DetectionEvent e;
                e.model = g.model->profile;
                e.kind = *kind;
                e.event = g.model->detection_type();
                e.t = w.t_end;
                e.confidence = p;
                own.push_back(e);
            }
        }
        events.insert(events.end(), own.begin(), own.end());
    }
    // Streaming emits in window order with the model order breaking ties; the
    // per-model lists above are each in window order already, so merge by
    // window end time, stable across models.
    std::stable_sort(events.begin(), events.end(),
                     [](const DetectionEvent& a, const DetectionEvent& b) { return a.t < b.t; });
    return events;
}

}  // namespace vrss::testing
