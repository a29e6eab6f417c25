#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vrss/telemetry.hpp"

namespace vrss {

// A parsed session recording before time alignment: the eye and character
// streams keep their native, independently sampled timestamps.
struct RawRecording {
    std::string session_id;
    std::string game;
    Perspective perspective = Perspective::FirstPerson;
    double eye_rate_hz = 120.0;
    double char_rate_hz = 90.0;
    std::vector<EyeSample> eye;
    std::vector<CharacterSample> character;
    std::vector<TimeInterval> pauses;
    std::size_t skipped_records = 0;  // unknown record types, skipped with a warning count
};

/// Parses the newline-delimited JSON session recording format. The header
/// record must come first; pause_start/pause_end must alternate.
/// Throws std::runtime_error naming the line number on malformed input.
RawRecording parse_session(std::istream& in);

RawRecording parse_session_file(const std::string& path);

/// Writes a recording in the same format (one JSON record per line).
void write_recording(std::ostream& out, const RawRecording& r);

/// Converts an aligned session back to a raw recording with both streams at
/// the session rate; round-trips through the recording format.
RawRecording to_recording(const Session& s);

/// Resamples both streams onto a common fixed-rate clock covering their
/// overlapping time span. Frame k sits at t0 + k/target_rate_hz; gaze vectors
/// are lerped and renormalized, quaternions nlerped along the shorter arc.
/// Inter-sample gaps longer than gap_threshold_s become gap_intervals on the
/// returned session rather than fabricated motion.
Session align_streams(const RawRecording& r, double target_rate_hz,
                      double gap_threshold_s = 0.25);

}  // namespace vrss
