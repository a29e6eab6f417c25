#include "vrss/synthgen.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vrss/geometry.hpp"

namespace vrss {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 dir_from_angles(double yaw, double pitch) {
    const double cp = std::cos(pitch);
    return Vec3{cp * std::sin(yaw), std::sin(pitch), cp * std::cos(yaw)}.normalized();
}

struct Episode {
    long long maneuver_f = 0;
    long long ramp_f = 0;        // pre-SS ramp start
    long long pause_start_f = 0;
    long long pause_end_f = 0;
    bool ramp = true;  // false: the pause happens without a gaze lead-up
};

}  // namespace

Session generate_session(const SynthSpec& spec) {
    if (spec.duration_s <= 0.0 || spec.rate_hz <= 0.0)
        throw std::runtime_error("synth: duration and rate must be positive");
    if (spec.n_episodes < 0) throw std::runtime_error("synth: n_episodes must be >= 0");
    if (spec.pause_min_s > spec.pause_max_s)
        throw std::runtime_error("synth: pause_min_s > pause_max_s");
    if (spec.ramp_prob > 1.0) throw std::runtime_error("synth: ramp_prob > 1");

    const double dt = 1.0 / spec.rate_hz;
    const long long n_frames = std::llround(spec.duration_s * spec.rate_hz);
    if (n_frames < 3) throw std::runtime_error("synth: session too short");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Episode layout: one slot per episode, uniformly jittered inside it.
    std::vector<Episode> episodes;
    if (spec.n_episodes > 0) {
        std::vector<double> pause_len(spec.n_episodes);
        for (double& v : pause_len)
            v = spec.pause_min_s + unit(rng) * (spec.pause_max_s - spec.pause_min_s);

        const double avail = spec.duration_s - spec.lead_in_s - spec.tail_s;
        const double slot = avail / spec.n_episodes;
        for (int e = 0; e < spec.n_episodes; ++e) {
            const double span = spec.maneuver_to_pause_s + pause_len[e] + spec.post_pause_gap_s;
            if (slot < span) {
                std::ostringstream os;
                os << "synth: cannot fit " << spec.n_episodes << " episodes in "
                   << spec.duration_s << " s";
                throw std::runtime_error(os.str());
            }
            const double t_m = spec.lead_in_s + e * slot + unit(rng) * (slot - span);
            Episode ep;
            ep.ramp = unit(rng) < spec.ramp_prob_resolved();
            ep.maneuver_f = std::llround(t_m * spec.rate_hz);
            ep.pause_start_f = ep.maneuver_f + std::llround(spec.maneuver_to_pause_s * spec.rate_hz);
            ep.ramp_f = ep.pause_start_f - std::llround(spec.pre_ss_len_s * spec.rate_hz);
            ep.pause_end_f = ep.pause_start_f + std::llround(pause_len[e] * spec.rate_hz);
            episodes.push_back(ep);
        }
    }

    const double speed_phase = unit(rng) * 2.0 * kPi;
    const double pupil_phase = unit(rng) * 2.0 * kPi;

    // Blink schedule (frame-index intervals, both eyes together).
    std::vector<std::pair<long long, long long>> blinks;
    if (spec.blink_rate_per_min > 0.0) {
        std::exponential_distribution<double> gap(spec.blink_rate_per_min / 60.0);
        std::uniform_real_distribution<double> bd(spec.blink_min_s, spec.blink_max_s);
        double t = gap(rng);
        while (true) {
            const double d = bd(rng);
            if (t + d >= spec.duration_s) break;
            const long long s = std::llround(t * spec.rate_hz);
            const long long len = std::max<long long>(1, std::llround(d * spec.rate_hz));
            blinks.emplace_back(s, s + len);
            t += d + gap(rng);
        }
    }

    const double gain = spec.eye_gain_resolved();
    const double decel_s = spec.stop_ramp_s;

    // Stochastic state.
    double fix_yaw = 0.0, fix_pitch = 0.0;
    double jl_yaw = 0.0, jl_pitch = 0.0, jr_yaw = 0.0, jr_pitch = 0.0;
    double turn = 0.0, speed_noise = 0.0;
    double heading = unit(rng) * 2.0 * kPi;
    Vec3 pos{0.0, 1.7, 0.0};
    double walk_phase = 0.0, bob_phase = 0.0;

    Session s;
    s.session_id = spec.session_id.empty()
                       ? "synth-" + std::to_string(spec.seed)
                       : spec.session_id;
    s.game = spec.game;
    s.perspective = spec.perspective;
    s.rate_hz = spec.rate_hz;
    s.frames.reserve(static_cast<std::size_t>(n_frames));

    std::size_t blink_i = 0;
    const double sqrt_dt = std::sqrt(dt);

    for (long long k = 0; k < n_frames; ++k) {
        const double t = static_cast<double>(k) / spec.rate_hz;

        // Where are we relative to the episodes?
        double ramp = 0.0;       // 0 baseline .. 1 full sickness jitter
        bool paused = false;
        double maneuver_u = -1.0;  // in [0,1] inside the maneuver burst
        double speed_scale = 1.0;
        for (const Episode& ep : episodes) {
            if (k >= ep.ramp_f && k < ep.pause_start_f) {
                if (ep.ramp)
                    ramp = static_cast<double>(k - ep.ramp_f) /
                           static_cast<double>(ep.pause_start_f - ep.ramp_f);
            } else if (k >= ep.pause_start_f && k < ep.pause_end_f) {
                if (ep.ramp) ramp = 1.0;
                paused = true;
            }
            const double tm = static_cast<double>(ep.maneuver_f) / spec.rate_hz;
            if (t >= tm && t < tm + spec.maneuver_len_s)
                maneuver_u = (t - tm) / spec.maneuver_len_s;
            const double ps = static_cast<double>(ep.pause_start_f) / spec.rate_hz;
            const double pe = static_cast<double>(ep.pause_end_f) / spec.rate_hz;
            if (t >= ps - decel_s && t < ps) speed_scale = (ps - t) / decel_s;
            if (t >= pe && t < pe + decel_s) speed_scale = (t - pe) / decel_s;
        }

        // Gaze: mean-reverting jitter around a wandering fixation; jitter
        // driving variance ramps up by eye_gain toward the pause.
        const double jsig = spec.jitter_sigma * std::sqrt(1.0 + (gain - 1.0) * ramp);
        fix_yaw += -spec.fixation_revert_rate * fix_yaw * dt +
                   spec.fixation_sigma * sqrt_dt * gauss(rng);
        fix_pitch += -spec.fixation_revert_rate * fix_pitch * dt +
                     spec.fixation_sigma * sqrt_dt * gauss(rng);
        jl_yaw += -spec.jitter_revert_rate * jl_yaw * dt + jsig * sqrt_dt * gauss(rng);
        jl_pitch += -spec.jitter_revert_rate * jl_pitch * dt + jsig * sqrt_dt * gauss(rng);
        jr_yaw += -spec.jitter_revert_rate * jr_yaw * dt + jsig * sqrt_dt * gauss(rng);
        jr_pitch += -spec.jitter_revert_rate * jr_pitch * dt + jsig * sqrt_dt * gauss(rng);
        turn += -spec.turn_revert_rate * turn * dt + spec.turn_sigma * sqrt_dt * gauss(rng);
        speed_noise += -spec.speed_noise_revert_rate * speed_noise * dt +
                       spec.speed_noise_sigma * sqrt_dt * gauss(rng);

        // Character kinematics.
        double turn_rate = turn;
        double burst = 0.0;
        if (maneuver_u >= 0.0) {
            const double env = std::sin(kPi * maneuver_u);
            turn_rate += spec.motion_intensity * spec.maneuver_turn_amp * env * env *
                         std::sin(2.0 * kPi * spec.maneuver_turn_hz * maneuver_u *
                                  spec.maneuver_len_s);
            burst = 1.5 * spec.motion_intensity * env * env;
        }
        double v = spec.base_speed + spec.speed_wobble * std::sin(walk_phase + speed_phase) +
                   speed_noise + burst;
        if (v < 0.3) v = 0.3;
        v *= speed_scale;
        if (paused) v = 0.0;

        if (!paused) {
            heading += turn_rate * dt;
            pos.x += v * std::sin(heading) * dt;
            pos.z += v * std::cos(heading) * dt;
            walk_phase += 2.0 * kPi * spec.speed_wobble_hz * dt;
            bob_phase += 2.0 * kPi * spec.bob_hz * dt;
            pos.y = 1.7 + spec.bob_amp * std::sin(bob_phase);
        }

        Frame f;
        f.t = t;
        f.character.t = t;
        f.character.pos = pos;
        f.character.quat = Quat::from_yaw(heading);

        // Blink?
        while (blink_i < blinks.size() && k >= blinks[blink_i].second) ++blink_i;
        const bool in_blink =
            blink_i < blinks.size() && k >= blinks[blink_i].first && k < blinks[blink_i].second;

        EyeSample& e = f.eye;
        e.t = t;
        if (in_blink && !s.frames.empty()) {
            // Tracker holds the last direction through the closure.
            const EyeSample& prev = s.frames.back().eye;
            e.gaze_l = prev.gaze_l;
            e.gaze_r = prev.gaze_r;
            e.gaze_c = prev.gaze_c;
        } else {
            e.gaze_l = dir_from_angles(fix_yaw + jl_yaw - 0.5 * spec.vergence_rad,
                                       fix_pitch + jl_pitch);
            e.gaze_r = dir_from_angles(fix_yaw + jr_yaw + 0.5 * spec.vergence_rad,
                                       fix_pitch + jr_pitch);
            e.gaze_c = (e.gaze_l + e.gaze_r).normalized();
        }
        e.open_l = in_blink ? 0.05 : 1.0;
        e.open_r = in_blink ? 0.05 : 1.0;
        e.pupil_l = 3.5 + 0.3 * std::sin(2.0 * kPi * 0.05 * t + pupil_phase);
        e.pupil_r = e.pupil_l;

        s.frames.push_back(std::move(f));
    }

    for (const Episode& ep : episodes)
        s.pauses.push_back({static_cast<double>(ep.pause_start_f) / spec.rate_hz,
                            static_cast<double>(ep.pause_end_f) / spec.rate_hz});

    return s;
}

}  // namespace vrss
