#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "vrss/features.hpp"
#include "vrss/labeling.hpp"
#include "vrss/synthgen.hpp"
#include "vrss/trainer.hpp"

using namespace vrss;

namespace {

Session short_session(std::uint64_t seed, double motion_intensity = 1.0) {
    SynthSpec spec;
    spec.duration_s = 45.0;
    spec.n_episodes = 1;
    spec.seed = seed;
    spec.motion_intensity = motion_intensity;
    return generate_session(spec);
}

// Re-runs the public feature/label pipeline the way the trainer is documented
// to: usable-window counts per class, independent of normalization (which
// cannot change window shapes or validity).
std::vector<std::size_t> expected_counts(const Session& s, ModelProfile profile,
                                         const TrainConfig& cfg) {
    auto feats = extract_features(s.frames, s.rate_hz, s.gap_intervals);
    const auto blinks = detect_blinks(s.frames, s.rate_hz, cfg.blink);
    std::vector<double> ts;
    for (const Frame& f : s.frames) ts.push_back(f.t);
    const LabeledSeries series =
        apply_blink_countermeasure(ts, label_frames(ts, s.pauses, cfg.pre_ss_len_s), blinks);
    apply_feature_hold(feats, blinks);

    const std::vector<int> classes = profile_class_labels(profile);
    std::vector<std::size_t> counts(classes.size(), 0);
    const auto L = static_cast<std::size_t>(cfg.window_len);
    for (const Window& w : make_windows(feats, L, static_cast<std::size_t>(cfg.stride))) {
        const EventLabel fl = series.labels[w.start_index + L - 1];
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (classes[c] == static_cast<int>(fl) &&
                window_usable(w, fl, cfg.min_valid_fraction))
                ++counts[c];
    }
    return counts;
}

}  // namespace

TEST_CASE("profile_class_labels maps A to {0,2} and B to {0,1}") {
    CHECK(profile_class_labels(ModelProfile::A) == std::vector<int>{0, 2});
    CHECK(profile_class_labels(ModelProfile::B) == std::vector<int>{0, 1});
}

TEST_CASE("build_dataset splits by whole session and counts usable windows") {
    std::vector<Session> sessions;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) sessions.push_back(short_session(seed));

    TrainConfig cfg;
    cfg.neg_per_pos = 0.0;  // keep everything so counts are exact
    cfg.seed = 5;

    for (const ModelProfile profile : {ModelProfile::A, ModelProfile::B}) {
        CAPTURE(profile == ModelProfile::A ? "A" : "B");
        cfg.profile = profile;
        const auto [train_ds, val_ds] = build_dataset(sessions, profile, cfg);

        std::vector<std::size_t> expect(2, 0);
        for (const Session& s : sessions) {
            const auto c = expected_counts(s, profile, cfg);
            expect[0] += c[0];
            expect[1] += c[1];
        }
        CHECK(train_ds.class_counts[0] + val_ds.class_counts[0] == expect[0]);
        CHECK(train_ds.class_counts[1] + val_ds.class_counts[1] == expect[1]);
        CHECK(train_ds.class_counts[1] > 0);
        CHECK(val_ds.class_counts[1] > 0);

        // class_counts match the examples, and the weights are
        // total / (n_classes * count_of_class).
        for (const Dataset* ds : {&train_ds, &val_ds}) {
            std::vector<std::size_t> seen(2, 0);
            const double total = static_cast<double>(ds->examples.size());
            for (const TrainingExample& e : ds->examples) {
                ++seen[static_cast<std::size_t>(e.label)];
                const double want =
                    total / (2.0 * static_cast<double>(ds->class_counts[e.label]));
                CHECK(e.weight == doctest::Approx(want).epsilon(1e-12));
                CHECK(e.window.rows() == cfg.window_len);
                CHECK(e.window.cols() == kFeatureDim);
            }
            CHECK(seen == ds->class_counts);
        }
    }
}

TEST_CASE("normalization statistics come from the training sessions only") {
    // Two deliberately different sessions; whichever lands in the training
    // split, its own stats (and not the pooled ones) must come back.
    const std::vector<Session> sessions = {short_session(31, 1.0), short_session(32, 2.5)};

    TrainConfig cfg;
    cfg.split_fraction = 0.5;
    cfg.seed = 9;

    NormStats got;
    (void)build_dataset(sessions, ModelProfile::A, cfg, &got);

    int matches = 0;
    for (const Session& s : sessions) {
        auto feats = extract_features(s.frames, s.rate_hz, s.gap_intervals);
        apply_feature_hold(feats, detect_blinks(s.frames, s.rate_hz, cfg.blink));
        const NormStats own = compute_norm_stats(feats);
        if ((own.mean - got.mean).cwiseAbs().maxCoeff() == 0.0 &&
            (own.std - got.std).cwiseAbs().maxCoeff() == 0.0)
            ++matches;
    }
    CHECK(matches == 1);
}

TEST_CASE("neg_per_pos caps training negatives and leaves validation alone") {
    std::vector<Session> sessions;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) sessions.push_back(short_session(seed));

    TrainConfig uncapped;
    uncapped.neg_per_pos = 0.0;
    uncapped.seed = 5;
    const auto [train_all, val_all] = build_dataset(sessions, ModelProfile::A, uncapped);

    TrainConfig capped = uncapped;
    capped.neg_per_pos = 2.0;
    const auto [train_cap, val_cap] = build_dataset(sessions, ModelProfile::A, capped);

    const std::size_t pos = train_all.class_counts[1];
    REQUIRE(train_all.class_counts[0] > 2 * pos);  // otherwise the cap is moot
    CHECK(train_cap.class_counts[1] == pos);
    CHECK(train_cap.class_counts[0] ==
          static_cast<std::size_t>(std::ceil(2.0 * static_cast<double>(pos))));
    CHECK(val_cap.class_counts[0] == val_all.class_counts[0]);
    CHECK(val_cap.class_counts[1] == val_all.class_counts[1]);
}

TEST_CASE("build_dataset and train reject bad configs and data") {
    const std::vector<Session> one = {short_session(1)};
    TrainConfig cfg;
    CHECK_THROWS_WITH_AS(build_dataset(one, ModelProfile::A, cfg),
                         doctest::Contains("at least 2"), std::runtime_error);

    std::vector<Session> two = {short_session(1), short_session(2)};
    TrainConfig bad = cfg;
    bad.window_len = 2;
    CHECK_THROWS_AS(build_dataset(two, ModelProfile::A, bad), std::runtime_error);
    bad = cfg;
    bad.stride = 0;
    CHECK_THROWS_AS(build_dataset(two, ModelProfile::A, bad), std::runtime_error);
    bad = cfg;
    bad.split_fraction = 1.0;
    CHECK_THROWS_AS(build_dataset(two, ModelProfile::A, bad), std::runtime_error);

    // No pauses anywhere -> no positive windows on either side.
    SynthSpec calm;
    calm.duration_s = 20.0;
    calm.n_episodes = 0;
    std::vector<Session> calm_sessions;
    for (std::uint64_t seed : {1ull, 2ull}) {
        calm.seed = seed;
        calm_sessions.push_back(generate_session(calm));
    }
    CHECK_THROWS_WITH_AS(build_dataset(calm_sessions, ModelProfile::A, cfg),
                         doctest::Contains("positive"), std::runtime_error);

    TrainConfig bad_train = cfg;
    bad_train.epochs = -1;
    CHECK_THROWS_AS(train(two, bad_train), std::runtime_error);
    bad_train = cfg;
    bad_train.batch_size = 0;
    CHECK_THROWS_AS(train(two, bad_train), std::runtime_error);
    bad_train = cfg;
    bad_train.learning_rate = 0.0;
    CHECK_THROWS_AS(train(two, bad_train), std::runtime_error);

    // Corrupt data must fail loudly, not silently train on NaNs. Both
    // sessions are poisoned so the check holds whichever lands in the split.
    std::vector<Session> poisoned = two;
    poisoned[0].frames[500].eye.gaze_l.x = std::numeric_limits<double>::quiet_NaN();
    poisoned[1].frames[500].eye.gaze_l.x = std::numeric_limits<double>::quiet_NaN();
    TrainConfig quick = cfg;
    quick.epochs = 1;
    quick.hidden = 4;
    CHECK_THROWS_AS(train(poisoned, quick), std::runtime_error);
}

TEST_CASE("epochs = 0 returns the seeded initialization untouched") {
    const std::vector<Session> sessions = {short_session(1), short_session(2)};
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.hidden = 12;
    cfg.seed = 77;

    const TrainResult r = train(sessions, cfg);
    CHECK(r.best_epoch == -1);
    CHECK(r.history.empty());
    CHECK(r.model.profile == ModelProfile::A);
    CHECK(r.model.class_labels == std::vector<int>{0, 2});

    const LstmParams init = init_params(kFeatureDim, 12, 2, 77);
    CHECK((r.model.params.W_ih - init.W_ih).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.model.params.W_hh - init.W_hh).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.model.params.b - init.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training is deterministic in the seed") {
    const std::vector<Session> sessions = {short_session(11), short_session(12)};
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.hidden = 8;
    cfg.window_len = 60;
    cfg.stride = 30;
    cfg.batch_size = 32;
    cfg.seed = 4;

    const TrainResult a = train(sessions, cfg);
    const TrainResult b = train(sessions, cfg);
    CHECK((a.model.params.W_ih - b.model.params.W_ih).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.model.params.W_hh - b.model.params.W_hh).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.model.params.W_out - b.model.params.W_out).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_balanced_accuracy == b.history[i].val_balanced_accuracy);
    }

    cfg.seed = 5;
    const TrainResult c = train(sessions, cfg);
    CHECK((a.model.params.W_ih - c.model.params.W_ih).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a few epochs separate pause windows from normal play") {
    std::vector<Session> sessions;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) sessions.push_back(short_session(seed));

    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.hidden = 24;
    cfg.seed = 0;

    const TrainResult r = train(sessions, cfg);
    CAPTURE(r.best_val_balanced_accuracy);
    CHECK(r.best_val_balanced_accuracy > 0.75);
    CHECK(r.best_epoch >= 1);
    CHECK(r.best_epoch <= 4);

    // best_* reports the (first) argmax over the recorded history.
    double best = 0.0;
    int best_epoch = -1;
    for (const EpochStats& e : r.history)
        if (e.val_balanced_accuracy > best || best_epoch < 0) {
            best = e.val_balanced_accuracy;
            best_epoch = e.epoch;
        }
    CHECK(r.best_val_balanced_accuracy == best);
    CHECK(r.best_epoch == best_epoch);
    for (const EpochStats& e : r.history) CHECK(std::isfinite(e.train_loss));
}

TEST_CASE("patience stops training once validation stalls") {
    const std::vector<Session> sessions = {short_session(11), short_session(12)};
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.hidden = 8;
    cfg.window_len = 60;
    cfg.stride = 30;
    cfg.patience = 1;
    cfg.learning_rate = 1e-12;  // updates too small to move the argmax

    const TrainResult r = train(sessions, cfg);
    CHECK(r.history.size() == 2);  // epoch 1 sets the best, epoch 2 exhausts patience
    CHECK(r.best_epoch == 1);
}

TEST_CASE("write_history_csv emits a parseable header + rows") {
    std::vector<EpochStats> history = {{1, 0.5, 0.625, 0.75}, {2, 0.25, 0.5, 0.875}};
    std::ostringstream out;
    write_history_csv(out, history);

    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,train_loss,val_loss,val_balanced_accuracy");
    for (const EpochStats& e : history) {
        REQUIRE(std::getline(in, line));
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        CHECK(std::stoi(cell) == e.epoch);
        std::getline(row, cell, ',');
        CHECK(std::stod(cell) == e.train_loss);  // 17 significant digits round-trip
        std::getline(row, cell, ',');
        CHECK(std::stod(cell) == e.val_loss);
        std::getline(row, cell, ',');
        CHECK(std::stod(cell) == e.val_balanced_accuracy);
    }
    CHECK(!std::getline(in, line));

    std::ostringstream empty;
    write_history_csv(empty, {});
    CHECK(empty.str() == "epoch,train_loss,val_loss,val_balanced_accuracy\n");
}
