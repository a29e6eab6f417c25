#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vrss/features.hpp"
#include "vrss/telemetry.hpp"

namespace vrss {

// Single-layer LSTM classifier parameters. Gate rows are stacked in the fixed
// order [input i, forget f, cell g, output o], H rows each.
struct LstmParams {
    int input_dim = kFeatureDim;  // D
    int hidden = 64;              // H
    int classes = 2;              // C

    Eigen::MatrixXd W_ih;   // 4H x D
    Eigen::MatrixXd W_hh;   // 4H x H
    Eigen::VectorXd b;      // 4H
    Eigen::MatrixXd W_out;  // C x H
    Eigen::VectorXd b_out;  // C

    void set_zero();
    double squared_norm() const;
};

/// Uniform(-1/sqrt(H), 1/sqrt(H)) input/recurrent weights, forget-gate bias
/// +1, zero output head. Deterministic in the seed.
LstmParams init_params(int input_dim, int hidden, int classes, std::uint64_t seed);

/// One LSTM step; returns (h', c').
std::pair<Eigen::VectorXd, Eigen::VectorXd> cell_forward(const LstmParams& p,
                                                         const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& h,
                                                         const Eigen::VectorXd& c);

/// Runs the cell over an L x D window from zero state and returns softmax
/// class probabilities (sum 1).
Eigen::VectorXd sequence_forward(const LstmParams& p, const Eigen::MatrixXd& window);

struct TrainingExample {
    Eigen::MatrixXd window;  // L x D
    int label = 0;           // class index < C
    double weight = 1.0;
};

/// Weighted cross-entropy over the batch (normalized by the weight sum) and
/// its exact gradients via backpropagation through time. All windows must
/// share one sequence length.
std::pair<double, LstmParams> loss_and_grads(const LstmParams& p,
                                             const std::vector<TrainingExample>& batch);

/// Forward-only batched inference: column i holds the class probabilities of
/// batch[i]. Equivalent to sequence_forward per example, but one gemm per step.
Eigen::MatrixXd batch_probs(const LstmParams& p, const std::vector<TrainingExample>& batch);

// Adam moment accumulators; shapes mirror the parameters they smooth.
struct TrainState {
    std::int64_t step = 0;
    LstmParams m;
    LstmParams v;

    static TrainState for_params(const LstmParams& p);
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;
constexpr double kGradClipNorm = 5.0;

/// Clips gradients to global L2 norm kGradClipNorm, then applies one
/// bias-corrected Adam update in place.
void optimizer_step(TrainState& s, LstmParams& p, const LstmParams& grads, double lr);

// A trained model bundled with everything inference needs: weights, the
// normalization statistics frozen from its training data, and the mapping
// from class index to event label.
struct Model {
    LstmParams params;
    NormStats norm;
    ModelProfile profile = ModelProfile::A;
    std::vector<int> class_labels;  // class index -> event label value

    DetectionType detection_type() const {
        return profile == ModelProfile::A ? DetectionType::PostSS : DetectionType::PreSS;
    }
};

constexpr int kModelFileVersion = 1;

/// JSON model file, decimal round-trip safe: load(save(m)) reproduces every
/// weight bit-exactly.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace vrss
