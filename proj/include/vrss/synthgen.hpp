#pragma once

#include <cstdint>
#include <string>

#include "vrss/telemetry.hpp"

namespace vrss {

// Everything the generator uses is a field here, so experiments tweak the
// spec, not the code. Durations in seconds, rates in Hz.
struct SynthSpec {
    std::string session_id;  // empty -> "synth-<seed>"
    std::string game = "corridor-run";
    Perspective perspective = Perspective::FirstPerson;
    double duration_s = 90.0;
    double rate_hz = 60.0;
    int n_episodes = 2;
    std::uint64_t seed = 0;

    // Episode layout. A maneuver burst starts each episode; the gaze-jitter
    // ramp occupies the pre_ss window directly before the pause.
    double maneuver_len_s = 2.5;
    double maneuver_to_pause_s = 12.0;
    double pre_ss_len_s = 6.0;
    double pause_min_s = 3.0;
    double pause_max_s = 8.0;
    double lead_in_s = 10.0;   // episode-free head of the session
    double tail_s = 2.0;       // episode-free tail
    double post_pause_gap_s = 2.0;
    double stop_ramp_s = 0.25;  // smooth deceleration into / out of a pause

    // Gaze model: mean-reverting jitter around a wandering fixation.
    // eye_gain multiplies the jitter *variance* at full ramp; <= 0 picks the
    // perspective default (1PP 3.0, 3PP 1.8).
    double eye_gain = 0.0;
    // Not every pause follows a genuine sickness lead-up — players also pause
    // for external reasons — so each episode carries its gaze ramp only with
    // this probability (the pause itself always happens and is still ground
    // truth). < 0 picks the perspective default; first-person play yields
    // about twice the genuine fraction (1PP 0.9, 3PP 0.45).
    double ramp_prob = -1.0;
    double jitter_sigma = 0.6;       // rad/s^(1/2), per-axis driving noise
    double jitter_revert_rate = 10.0;  // 1/s
    double fixation_sigma = 0.35;
    double fixation_revert_rate = 0.8;
    double vergence_rad = 0.04;  // constant l/r gaze separation

    // Character motion.
    double motion_intensity = 1.0;  // scales maneuver amplitude
    double base_speed = 2.0;        // m/s
    double speed_wobble = 0.6;
    double speed_wobble_hz = 0.15;
    double turn_sigma = 0.9;        // rad/s driving noise of heading rate
    double turn_revert_rate = 1.2;
    double speed_noise_sigma = 0.15;
    double speed_noise_revert_rate = 1.0;
    double maneuver_turn_amp = 3.0;  // rad/s
    double maneuver_turn_hz = 1.2;
    double bob_amp = 0.04;  // vertical head bob, m
    double bob_hz = 1.8;

    // Blinks (both eyes together, shorter than the long-blink threshold).
    double blink_rate_per_min = 8.0;
    double blink_min_s = 0.08;
    double blink_max_s = 0.2;

    double eye_gain_resolved() const {
        if (eye_gain > 0.0) return eye_gain;
        return perspective == Perspective::FirstPerson ? 3.0 : 1.8;
    }

    double ramp_prob_resolved() const {
        if (ramp_prob >= 0.0) return ramp_prob;
        return perspective == Perspective::FirstPerson ? 0.9 : 0.45;
    }
};

// Deterministic in spec.seed; the result passes validate_session.
// Throws if n_episodes cannot fit into duration_s.
Session generate_session(const SynthSpec& spec);

}  // namespace vrss
