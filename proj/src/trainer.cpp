#include "vrss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vrss/features.hpp"

namespace vrss {

namespace {

struct PreparedSession {
    std::vector<FeatureFrame> features;  // held, not yet normalized
    LabeledSeries series;
};

PreparedSession prepare(const Session& s, const TrainConfig& cfg) {
    PreparedSession out;
    out.features = extract_features(s.frames, s.rate_hz, s.gap_intervals);
    const auto blinks = detect_blinks(s.frames, s.rate_hz, cfg.blink);

    std::vector<double> ts(s.frames.size());
    for (std::size_t i = 0; i < s.frames.size(); ++i) ts[i] = s.frames[i].t;
    out.series = apply_blink_countermeasure(ts, label_frames(ts, s.pauses, cfg.pre_ss_len_s),
                                            blinks);
    apply_feature_hold(out.features, blinks);
    return out;
}

int class_index_of(const std::vector<int>& class_labels, EventLabel l) {
    for (std::size_t i = 0; i < class_labels.size(); ++i)
        if (class_labels[i] == static_cast<int>(l)) return static_cast<int>(i);
    return -1;
}

void apply_class_weights(Dataset& ds) {
    const double total = static_cast<double>(ds.examples.size());
    const double c = static_cast<double>(ds.class_counts.size());
    for (TrainingExample& e : ds.examples)
        e.weight = total / (c * static_cast<double>(ds.class_counts[e.label]));
}

struct ValMetrics {
    double loss = 0.0;
    double balanced_accuracy = 0.0;
};

ValMetrics validate(const LstmParams& p, const std::vector<TrainingExample>& examples) {
    constexpr std::size_t kChunk = 256;
    double wsum = 0.0, loss = 0.0;
    std::vector<std::size_t> count(p.classes, 0), correct(p.classes, 0);

    for (std::size_t i = 0; i < examples.size(); i += kChunk) {
        const std::size_t n = std::min(kChunk, examples.size() - i);
        std::vector<TrainingExample> chunk(examples.begin() + i, examples.begin() + i + n);
        const Eigen::MatrixXd probs = batch_probs(p, chunk);
        for (std::size_t j = 0; j < n; ++j) {
            const TrainingExample& e = chunk[j];
            loss += e.weight * -std::log(std::max(probs(e.label, j), 1e-300));
            wsum += e.weight;
            Eigen::Index pred;
            probs.col(j).maxCoeff(&pred);
            ++count[e.label];
            if (pred == e.label) ++correct[e.label];
        }
    }

    ValMetrics m;
    m.loss = loss / wsum;
    double recall_sum = 0.0;
    for (int c = 0; c < p.classes; ++c)
        recall_sum += count[c] ? static_cast<double>(correct[c]) / count[c] : 0.0;
    m.balanced_accuracy = recall_sum / p.classes;
    return m;
}

}  // namespace

std::vector<int> profile_class_labels(ModelProfile profile) {
    return profile == ModelProfile::A ? std::vector<int>{0, 2} : std::vector<int>{0, 1};
}

std::pair<Dataset, Dataset> build_dataset(const std::vector<Session>& sessions,
                                          ModelProfile profile, const TrainConfig& cfg,
                                          NormStats* stats_out) {
    if (sessions.size() < 2)
        throw std::runtime_error("build_dataset: need at least 2 sessions for a disjoint split");
    if (cfg.window_len < 3 || cfg.stride < 1)
        throw std::runtime_error("build_dataset: window_len must be >= 3 and stride >= 1");
    if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
        throw std::runtime_error("build_dataset: split_fraction must be in (0,1)");

    std::vector<PreparedSession> prepared;
    prepared.reserve(sessions.size());
    for (const Session& s : sessions) prepared.push_back(prepare(s, cfg));

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n = sessions.size();
    std::size_t n_train = static_cast<std::size_t>(std::lround(cfg.split_fraction * n));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    std::vector<bool> is_train(n, false);
    for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;

    // Normalization statistics from training sessions only.
    std::vector<FeatureFrame> train_feats;
    for (std::size_t i = 0; i < n; ++i)
        if (is_train[i])
            train_feats.insert(train_feats.end(), prepared[i].features.begin(),
                               prepared[i].features.end());
    const NormStats stats = compute_norm_stats(train_feats);
    if (stats_out) *stats_out = stats;

    const std::vector<int> class_labels = profile_class_labels(profile);
    Dataset train, val;
    train.class_counts.assign(class_labels.size(), 0);
    val.class_counts.assign(class_labels.size(), 0);

    const auto L = static_cast<std::size_t>(cfg.window_len);
    for (std::size_t i = 0; i < n; ++i) {
        const auto normed = normalize(prepared[i].features, stats);
        Dataset& side = is_train[i] ? train : val;
        for (Window& w : make_windows(normed, L, static_cast<std::size_t>(cfg.stride))) {
            const std::size_t last = w.start_index + L - 1;
            const EventLabel fl = prepared[i].series.labels[last];
            const int ci = class_index_of(class_labels, fl);
            if (ci < 0) continue;
            if (!window_usable(w, fl, cfg.min_valid_fraction)) continue;
            ++side.class_counts[ci];
            side.examples.push_back({std::move(w.features), ci, 1.0});
        }
    }

    for (const Dataset* ds : {&train, &val})
        for (std::size_t c = 0; c < ds->class_counts.size(); ++c)
            if (ds->class_counts[c] == 0) {
                std::ostringstream os;
                os << "no " << (c == 0 ? "class-0" : "positive") << " examples in the "
                   << (ds == &train ? "training" : "validation") << " split";
                throw std::runtime_error(os.str());
            }

    // Cap training negatives; positives are the scarce signal.
    if (cfg.neg_per_pos > 0.0) {
        const std::size_t pos = train.class_counts[1];
        const auto max_neg =
            static_cast<std::size_t>(std::ceil(cfg.neg_per_pos * static_cast<double>(pos)));
        if (train.class_counts[0] > max_neg) {
            std::vector<std::size_t> negs;
            for (std::size_t i = 0; i < train.examples.size(); ++i)
                if (train.examples[i].label == 0) negs.push_back(i);
            std::shuffle(negs.begin(), negs.end(), rng);
            negs.resize(max_neg);
            std::vector<bool> keep(train.examples.size(), false);
            for (std::size_t i = 0; i < train.examples.size(); ++i)
                if (train.examples[i].label != 0) keep[i] = true;
            for (std::size_t i : negs) keep[i] = true;

            Dataset capped;
            capped.class_counts.assign(class_labels.size(), 0);
            for (std::size_t i = 0; i < train.examples.size(); ++i)
                if (keep[i]) {
                    ++capped.class_counts[train.examples[i].label];
                    capped.examples.push_back(std::move(train.examples[i]));
                }
            train = std::move(capped);
        }
    }

    apply_class_weights(train);
    apply_class_weights(val);
    return {std::move(train), std::move(val)};
}

TrainResult train(const std::vector<Session>& sessions, const TrainConfig& cfg) {
    if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0)
        throw std::runtime_error("train: invalid config");

    NormStats stats;
    auto [train_ds, val_ds] = build_dataset(sessions, cfg.profile, cfg, &stats);

    TrainResult result;
    result.model.profile = cfg.profile;
    result.model.class_labels = profile_class_labels(cfg.profile);
    result.model.norm = stats;
    result.model.params = init_params(kFeatureDim, cfg.hidden,
                                      static_cast<int>(result.model.class_labels.size()),
                                      cfg.seed);
    if (cfg.epochs == 0) return result;

    TrainState state = TrainState::for_params(result.model.params);
    LstmParams params = result.model.params;
    LstmParams best = params;

    std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> order(train_ds.examples.size());
    std::iota(order.begin(), order.end(), 0);

    int stale = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0, weight_sum = 0.0;
        for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
            const std::size_t bn = std::min<std::size_t>(cfg.batch_size, order.size() - i);
            std::vector<TrainingExample> batch;
            batch.reserve(bn);
            double bw = 0.0;
            for (std::size_t j = 0; j < bn; ++j) {
                batch.push_back(train_ds.examples[order[i + j]]);
                bw += batch.back().weight;
            }
            auto [loss, grads] = loss_and_grads(params, batch);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "training diverged at epoch " << epoch;
                throw std::runtime_error(os.str());
            }
            loss_sum += loss * bw;
            weight_sum += bw;
            optimizer_step(state, params, grads, cfg.learning_rate);
        }

        const ValMetrics vm = validate(params, val_ds.examples);
        result.history.push_back(
            {epoch, loss_sum / weight_sum, vm.loss, vm.balanced_accuracy});

        if (vm.balanced_accuracy > result.best_val_balanced_accuracy ||
            result.best_epoch < 0) {
            result.best_val_balanced_accuracy = vm.balanced_accuracy;
            result.best_epoch = epoch;
            best = params;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            break;
        }
    }

    result.model.params = std::move(best);
    return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
    out << "epoch,train_loss,val_loss,val_balanced_accuracy\n";
    out.precision(17);
    for (const EpochStats& e : history)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
            << e.val_balanced_accuracy << '\n';
}

}  // namespace vrss
