#include "vrss/detector.hpp"

#include <cmath>
#include <stdexcept>

#include "vrss/geometry.hpp"

namespace vrss {

HysteresisGate::HysteresisGate(int raise_count, int clear_count, double theta_raise,
                               double theta_clear)
    : k_(raise_count), m_(clear_count), up_(theta_raise), down_(theta_clear) {
    if (k_ < 1 || m_ < 1) throw std::runtime_error("hysteresis counts must be >= 1");
}

std::optional<DetectionKind> HysteresisGate::update(double p) {
    if (!raised_) {
        if (p > up_) {
            if (++streak_ >= k_) {
                raised_ = true;
                streak_ = 0;
                return DetectionKind::Raised;
            }
        } else {
            streak_ = 0;
        }
    } else {
        if (p < down_) {
            if (++streak_ >= m_) {
                raised_ = false;
                streak_ = 0;
                return DetectionKind::Cleared;
            }
        } else {
            streak_ = 0;
        }
    }
    return std::nullopt;
}

void HysteresisGate::reset() {
    raised_ = false;
    streak_ = 0;
}

Detector::Detector(std::vector<std::shared_ptr<const Model>> models, const DetectorConfig& cfg)
    : cfg_(cfg) {
    if (models.empty()) throw std::runtime_error("detector: no models loaded");
    if (cfg_.rate_hz <= 0.0) throw std::runtime_error("detector: rate_hz must be positive");
    if (cfg_.window_len < 3) throw std::runtime_error("detector: window_len must be >= 3");
    if (cfg_.stride < 1) throw std::runtime_error("detector: stride must be >= 1");
    dt_ = 1.0 / cfg_.rate_hz;
    min_blink_frames_ = static_cast<long long>(
        std::ceil(cfg_.blink.min_duration_s * cfg_.rate_hz - 1e-9));

    for (auto& m : models) {
        if (!m) throw std::runtime_error("detector: null model");
        if (m->params.input_dim != kFeatureDim)
            throw std::runtime_error("detector: model input_dim != feature dim");
        if (m->params.classes != 2 || m->class_labels.size() != 2)
            throw std::runtime_error("detector: models must be binary");
        models_.push_back(
            {std::move(m), HysteresisGate(cfg_.raise_count, cfg_.clear_count, cfg_.theta_raise,
                                          cfg_.theta_clear)});
    }
}

Detector::Detector(std::vector<Model> models, const DetectorConfig& cfg)
    : Detector(
          [&models] {
              std::vector<std::shared_ptr<const Model>> shared;
              shared.reserve(models.size());
              for (Model& m : models)
                  shared.push_back(std::make_shared<const Model>(std::move(m)));
              return shared;
          }(),
          cfg) {}

Detector::Feat Detector::interior_feat(const Frame& a, const Frame& b, const Frame& c) {
    const double inv_dt2 = 1.0 / (dt_ * dt_);
    const double inv_2dt = 1.0 / (2.0 * dt_);

    Feat f;
    f.t = b.t;
    f.raw[0] = ((c.eye.gaze_l - b.eye.gaze_l * 2.0 + a.eye.gaze_l) * inv_dt2).norm();
    f.raw[1] = ((c.eye.gaze_r - b.eye.gaze_r * 2.0 + a.eye.gaze_r) * inv_dt2).norm();
    f.raw[2] = ((c.character.pos - a.character.pos) * inv_2dt).norm();
    f.raw[3] = ((c.character.pos - b.character.pos * 2.0 + a.character.pos) * inv_dt2).norm();
    const double omega = rotation_angle(b.character.quat, c.character.quat) * cfg_.rate_hz;
    f.raw[4] = std::fabs(omega - prev_omega_) * cfg_.rate_hz;
    prev_omega_ = omega;
    return f;
}

void Detector::finalize(long long idx, const Feat& value) {
    Feat f = value;
    const bool in_blink =
        (run_confirmed_ && run_start_ >= 0 && idx >= run_start_) ||
        (closed_blink_valid_ && idx >= closed_blink_s_ && idx < closed_blink_e_);
    if (in_blink) {
        f.valid = false;
        if (have_held_) {
            for (int d = 0; d < kFeatureDim; ++d) f.eff[d] = held_[d];
        } else {
            for (int d = 0; d < kFeatureDim; ++d) f.eff[d] = f.raw[d];
            if (backfill_from_ < 0) backfill_from_ = idx;
        }
    } else {
        f.valid = true;
        for (int d = 0; d < kFeatureDim; ++d) f.eff[d] = f.raw[d];
        if (backfill_from_ >= 0) {
            for (long long j = backfill_from_; j < finalized_; ++j)
                if (j >= base_ && !at(j).valid)
                    for (int d = 0; d < kFeatureDim; ++d) at(j).eff[d] = f.raw[d];
            backfill_from_ = -1;
        }
    }
    feats_.push_back(f);
    ++finalized_;
}

void Detector::on_blink_confirmed(std::vector<DetectionEvent>&) {
    deferred_.clear();  // every deferred window ends inside this blink
    if (run_start_ > 0) {
        have_held_ = true;
        const Feat& src = at(run_start_ - 1);
        for (int d = 0; d < kFeatureDim; ++d) held_[d] = src.eff[d];
    } else {
        have_held_ = false;
        if (backfill_from_ < 0) backfill_from_ = run_start_;
    }
    for (long long j = std::max(run_start_, base_); j < finalized_; ++j) {
        Feat& f = at(j);
        f.valid = false;
        if (have_held_)
            for (int d = 0; d < kFeatureDim; ++d) f.eff[d] = held_[d];
    }
}

void Detector::run_inference(long long end_idx, std::vector<DetectionEvent>& out) {
    const long long L = cfg_.window_len;
    Eigen::MatrixXd win(L, kFeatureDim);
    for (long long i = 0; i < L; ++i) {
        const Feat& f = at(end_idx - L + 1 + i);
        for (int d = 0; d < kFeatureDim; ++d) win(i, d) = f.eff[d];
    }

    for (Loaded& lm : models_) {
        Eigen::MatrixXd normed(L, kFeatureDim);
        const NormStats& ns = lm.model->norm;
        for (long long i = 0; i < L; ++i)
            for (int d = 0; d < kFeatureDim; ++d)
                normed(i, d) = (win(i, d) - ns.mean[d]) / std::max(ns.std[d], 1e-8);

        const Eigen::VectorXd probs = sequence_forward(lm.model->params, normed);
        const double p = probs[1];
        if (auto kind = lm.gate.update(p)) {
            DetectionEvent ev;
            ev.model = lm.model->profile;
            ev.kind = *kind;
            ev.event = lm.model->detection_type();
            ev.t = at(end_idx).t;
            ev.confidence = p;
            out.push_back(ev);
        }
    }
}

void Detector::maybe_infer(long long end_idx, std::vector<DetectionEvent>& out) {
    const bool in_blink =
        (run_confirmed_ && run_start_ >= 0 && end_idx >= run_start_) ||
        (closed_blink_valid_ && end_idx >= closed_blink_s_ && end_idx < closed_blink_e_);
    if (in_blink) return;  // counter-measure: no inference inside a long blink
    if (run_start_ >= 0 && !run_confirmed_ && run_start_ <= end_idx) {
        deferred_.push_back(end_idx);  // closure may yet become a long blink
        return;
    }
    run_inference(end_idx, out);
}

void Detector::flush_deferred(std::vector<DetectionEvent>& out) {
    for (long long end_idx : deferred_) run_inference(end_idx, out);
    deferred_.clear();
}

void Detector::trim() {
    long long keep = finalized_ - (cfg_.window_len + min_blink_frames_ + 4);
    if (run_start_ >= 0) keep = std::min(keep, run_start_ - 1);
    if (backfill_from_ >= 0) keep = std::min(keep, backfill_from_);
    while (base_ < keep && !feats_.empty()) {
        feats_.pop_front();
        ++base_;
    }
}

std::vector<DetectionEvent> Detector::push_frame(const Frame& frame) {
    if (finished_) throw std::runtime_error("detector: push_frame after finish(); reset() first");
    if (arrivals_ > 0 && frame.t <= last_t_)
        throw std::runtime_error("detector: non-monotonic frame timestamp");
    last_t_ = frame.t;

    const long long n = arrivals_++;
    recent_.push_back(frame);
    if (recent_.size() > 3) recent_.pop_front();

    std::vector<DetectionEvent> out;

    // Both-eye closure tracking uses the arriving frame immediately.
    const bool low = frame.eye.open_l < cfg_.blink.openness_threshold &&
                     frame.eye.open_r < cfg_.blink.openness_threshold;
    if (low) {
        if (run_start_ < 0) {
            run_start_ = n;
            run_confirmed_ = false;
        }
        if (!run_confirmed_ && n - run_start_ + 1 >= min_blink_frames_) {
            run_confirmed_ = true;
            on_blink_confirmed(out);
        }
    } else if (run_start_ >= 0) {
        if (run_confirmed_) {
            closed_blink_valid_ = true;
            closed_blink_s_ = run_start_;
            closed_blink_e_ = n;  // interval [s, n): frame n is open again
        } else {
            flush_deferred(out);  // too short to be a long blink
        }
        run_start_ = -1;
        run_confirmed_ = false;
        // have_held_ stays: the blink's final frame finalizes only on the
        // next arrival and must still take the held value, not a backfill.
    }

    // A frame's central-difference features finalize when its successor
    // arrives; the first interior frame also back-fills frame 0's copy.
    if (n == 2) {
        prev_omega_ =
            rotation_angle(recent_[0].character.quat, recent_[1].character.quat) * cfg_.rate_hz;
        Feat f1 = interior_feat(recent_[0], recent_[1], recent_[2]);
        Feat f0 = f1;
        f0.t = recent_[0].t;
        finalize(0, f0);
        finalize(1, f1);
    } else if (n > 2) {
        finalize(n - 1, interior_feat(recent_[0], recent_[1], recent_[2]));
    }

    if (finalized_ >= cfg_.window_len &&
        (finalized_ - cfg_.window_len) % cfg_.stride == 0)
        maybe_infer(finalized_ - 1, out);

    trim();
    return out;
}

std::vector<DetectionEvent> Detector::finish() {
    if (finished_) return {};
    finished_ = true;
    if (arrivals_ < 3) return {};

    std::vector<DetectionEvent> out;

    // A closure still open at end-of-stream counts as a blink if it already
    // lasted the minimum duration, exactly like the offline trailing-run rule.
    if (run_start_ >= 0) {
        if (!run_confirmed_ && arrivals_ - run_start_ >= min_blink_frames_) {
            run_confirmed_ = true;
            on_blink_confirmed(out);
        } else if (!run_confirmed_) {
            flush_deferred(out);
            run_start_ = -1;
        }
    }

    // The last frame's features are the endpoint copy of its predecessor's.
    const long long last_idx = arrivals_ - 1;
    Feat f = at(last_idx - 1);
    Feat copy;
    copy.t = recent_.back().t;
    for (int d = 0; d < kFeatureDim; ++d) copy.raw[d] = f.raw[d];
    finalize(last_idx, copy);

    if (finalized_ >= cfg_.window_len &&
        (finalized_ - cfg_.window_len) % cfg_.stride == 0)
        maybe_infer(finalized_ - 1, out);

    return out;
}

void Detector::reset() {
    recent_.clear();
    feats_.clear();
    base_ = 0;
    finalized_ = 0;
    arrivals_ = 0;
    last_t_ = 0.0;
    prev_omega_ = 0.0;
    finished_ = false;
    run_start_ = -1;
    run_confirmed_ = false;
    have_held_ = false;
    backfill_from_ = -1;
    closed_blink_valid_ = false;
    closed_blink_s_ = closed_blink_e_ = 0;
    deferred_.clear();
    for (Loaded& lm : models_) lm.gate.reset();
}

}  // namespace vrss
