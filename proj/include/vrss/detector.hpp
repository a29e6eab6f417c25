#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "vrss/features.hpp"
#include "vrss/lstm.hpp"
#include "vrss/telemetry.hpp"

namespace vrss {

struct DetectorConfig {
    double rate_hz = 60.0;
    int window_len = 120;  // L, >= 3
    int stride = 15;       // S
    int raise_count = 3;   // K consecutive p > theta_raise to raise
    int clear_count = 8;   // M consecutive p < theta_clear to clear
    double theta_raise = 0.7;
    double theta_clear = 0.5;
    BlinkParams blink;
};

// Debounces one model's positive-class probability stream. Raised and Cleared
// strictly alternate.
class HysteresisGate {
  public:
    HysteresisGate() = default;
    HysteresisGate(int raise_count, int clear_count, double theta_raise, double theta_clear);

    std::optional<DetectionKind> update(double p);
    void reset();
    bool raised() const { return raised_; }

  private:
    int k_ = 3, m_ = 8;
    double up_ = 0.7, down_ = 0.5;
    bool raised_ = false;
    int streak_ = 0;
};

// Streaming detection over one session. Frames go in one at a time; detection
// events come out. Feature derivatives are central, so a frame's features
// finalize when its successor arrives; every stride-th finalized frame ends a
// window that is run through each loaded model and its hysteresis gate.
//
// Long both-eye blinks reproduce the offline counter-measure causally:
//   - while a closure is still shorter than the minimum blink duration, due
//     inferences are deferred (the closure might turn out to be a long blink);
//   - once it reaches the minimum duration, deferred and subsequent inferences
//     whose final frame lies inside the blink are dropped (gates freeze), and
//     the blink's frames get their features held at the last valid value;
//   - if the closure ends sooner, the deferred inferences run unchanged.
// The closure test is both eyes simultaneously below the openness threshold.
// Offline merging can also join two *partially* overlapping one-eye closures
// into a Both interval; a causal detector cannot (that union can grow without
// bound), so such asymmetric closures — which ordinary blinks do not produce —
// are the one place streaming and offline labeling may differ.
class Detector {
  public:
    /// Parameters are read-only here; concurrent sessions may share them.
    Detector(std::vector<std::shared_ptr<const Model>> models, const DetectorConfig& cfg = {});
    Detector(std::vector<Model> models, const DetectorConfig& cfg = {});

    /// Frame timestamps must be strictly increasing. Returns the events this
    /// frame's arrival decided (possibly several when a short closure
    /// releases deferred inferences).
    std::vector<DetectionEvent> push_frame(const Frame& frame);

    /// End of stream: finalizes the last frame (endpoint copy) and runs a
    /// final due inference, mirroring the offline pipeline's tail handling.
    /// Further push_frame calls are invalid until reset().
    std::vector<DetectionEvent> finish();

    /// Clears all stream state; models stay loaded.
    void reset();

    const DetectorConfig& config() const { return cfg_; }
    long long frames_seen() const { return arrivals_; }

  private:
    struct Loaded {
        std::shared_ptr<const Model> model;
        HysteresisGate gate;
    };
    struct Feat {
        double t = 0.0;
        double raw[kFeatureDim] = {};  // as computed from the stencil
        double eff[kFeatureDim] = {};  // after blink hold
        bool valid = true;
    };

    void finalize(long long idx, const Feat& value);
    Feat interior_feat(const Frame& a, const Frame& b, const Frame& c);
    void on_blink_confirmed(std::vector<DetectionEvent>& out);
    void run_inference(long long end_idx, std::vector<DetectionEvent>& out);
    void maybe_infer(long long end_idx, std::vector<DetectionEvent>& out);
    void flush_deferred(std::vector<DetectionEvent>& out);
    void trim();
    Feat& at(long long idx) { return feats_[static_cast<std::size_t>(idx - base_)]; }

    DetectorConfig cfg_;
    std::vector<Loaded> models_;
    double dt_ = 0.0;
    long long min_blink_frames_ = 0;

    std::deque<Frame> recent_;  // up to the last 3 raw frames
    std::deque<Feat> feats_;    // finalized features, global index base_ at front
    long long base_ = 0;
    long long finalized_ = 0;
    long long arrivals_ = 0;
    double last_t_ = 0.0;
    double prev_omega_ = 0.0;
    bool finished_ = false;

    // Both-eye closure state machine.
    long long run_start_ = -1;  // arrival index of first closed frame, -1 = open
    bool run_confirmed_ = false;
    // Most recent confirmed closure that has ended; its last frame finalizes
    // one arrival after the closure closes, so one interval of memory suffices.
    bool closed_blink_valid_ = false;
    long long closed_blink_s_ = 0;
    long long closed_blink_e_ = 0;
    double held_[kFeatureDim] = {};
    bool have_held_ = false;
    long long backfill_from_ = -1;  // leading-blink frames awaiting a valid value
    std::vector<long long> deferred_;  // due inferences awaiting closure outcome
};

}  // namespace vrss
