#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "vrss/labeling.hpp"
#include "vrss/lstm.hpp"
#include "vrss/telemetry.hpp"

namespace vrss {

struct TrainConfig {
    ModelProfile profile = ModelProfile::A;
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 3e-3;
    std::uint64_t seed = 0;
    int hidden = 64;
    int window_len = 120;  // 2 s at 60 Hz
    int stride = 15;       // 0.25 s
    double split_fraction = 0.75;  // share of sessions that train
    int patience = 5;              // epochs without val improvement; 0 = off
    // Training-set class-0 windows are capped at neg_per_pos x positives
    // (0 = keep all); validation always keeps everything.
    double neg_per_pos = 2.0;
    double min_valid_fraction = kMinValidFraction;
    double pre_ss_len_s = kDefaultPreSsLenS;
    BlinkParams blink;
};

// Windows with labels already mapped to model-class indices.
struct Dataset {
    std::vector<TrainingExample> examples;
    std::vector<std::size_t> class_counts;  // index = class index
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_balanced_accuracy = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
    int best_epoch = -1;  // -1 when epochs == 0
    double best_val_balanced_accuracy = 0.0;
};

/// Event labels a model of the given profile distinguishes, in class-index
/// order: A -> {0, 2}, B -> {0, 1}.
std::vector<int> profile_class_labels(ModelProfile profile);

/// Runs the offline feature/label pipeline over every session, splits by whole
/// session, and assembles per-profile window sets with inverse-frequency
/// weights. Normalization statistics come from the training sessions only.
/// Throws on < 2 sessions or when either side lacks positive windows.
std::pair<Dataset, Dataset> build_dataset(const std::vector<Session>& sessions,
                                          ModelProfile profile, const TrainConfig& cfg,
                                          NormStats* stats_out = nullptr);

TrainResult train(const std::vector<Session>& sessions, const TrainConfig& cfg);

/// epoch,train_loss,val_loss,val_balanced_accuracy per line, header included.
void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

}  // namespace vrss
