#pragma once

#include <string>
#include <vector>

#include "vrss/geometry.hpp"

namespace vrss {

// One eye-tracker sample: 13 scalar channels (3x3 gaze components, two
// openness values, two pupil diameters).
struct EyeSample {
    double t = 0.0;
    Vec3 gaze_l, gaze_r, gaze_c;  // unit gaze directions
    double open_l = 1.0, open_r = 1.0;  // eyelid openness in [0,1]
    double pupil_l = 3.0, pupil_r = 3.0;  // mm; <= 0 means the tracker flagged it invalid
};

// Character pose from the in-game virtual sensor.
struct CharacterSample {
    double t = 0.0;
    Vec3 pos;   // world position, meters
    Quat quat;  // orientation, unit
};

// One time-aligned telemetry sample.
struct Frame {
    double t = 0.0;
    EyeSample eye;
    CharacterSample character;
};

enum class Perspective { FirstPerson, ThirdPerson };

inline const char* to_string(Perspective p) {
    return p == Perspective::FirstPerson ? "1PP" : "3PP";
}

// Closed-open interval [start, end) in session seconds.
struct TimeInterval {
    double start = 0.0;
    double end = 0.0;
    bool contains(double t) const { return t >= start && t < end; }
};

struct Session {
    std::string session_id;
    std::string game;
    Perspective perspective = Perspective::FirstPerson;
    double rate_hz = 60.0;            // aligned frame rate
    std::vector<Frame> frames;        // strictly increasing timestamps
    std::vector<TimeInterval> pauses; // sorted, non-overlapping; ground truth for sickness episodes
    // Spans where a source stream had an inter-sample gap too long to
    // interpolate across; downstream feature frames in these spans are
    // invalidated.
    std::vector<TimeInterval> gap_intervals;
};

// Per-frame class: 0 normal gameplay, 1 the window leading into a sickness
// pause, 2 the pause itself.
enum class EventLabel : int { Normal = 0, PreSS = 1, Paused = 2 };

enum class ModelProfile { A, B };  // A: post-onset detection, B: pre-onset
enum class DetectionKind { Raised, Cleared };
enum class DetectionType { PreSS, PostSS };

inline const char* to_string(ModelProfile p) { return p == ModelProfile::A ? "A" : "B"; }
inline const char* to_string(DetectionKind k) { return k == DetectionKind::Raised ? "raised" : "cleared"; }
inline const char* to_string(DetectionType t) { return t == DetectionType::PreSS ? "pre_ss" : "post_ss"; }

struct DetectionEvent {
    ModelProfile model = ModelProfile::A;
    DetectionKind kind = DetectionKind::Raised;
    DetectionType event = DetectionType::PostSS;
    double t = 0.0;
    double confidence = 0.0;  // model probability at the deciding inference

    bool operator==(const DetectionEvent&) const = default;
};

/// Checks every session invariant; returns one human-readable description per
/// violation (empty means the session is well formed). Violations name the
/// offending frame or pause index.
std::vector<std::string> validate_session(const Session& s);

}  // namespace vrss
