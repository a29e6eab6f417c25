#include "vrss/lstm.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vrss {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_shapes(const LstmParams& p) {
    const int H = p.hidden;
    if (p.W_ih.rows() != 4 * H || p.W_ih.cols() != p.input_dim ||
        p.W_hh.rows() != 4 * H || p.W_hh.cols() != H || p.b.size() != 4 * H ||
        p.W_out.rows() != p.classes || p.W_out.cols() != H || p.b_out.size() != p.classes)
        throw std::runtime_error("LSTM parameter shape mismatch");
}

}  // namespace

void LstmParams::set_zero() {
    W_ih.setZero();
    W_hh.setZero();
    b.setZero();
    W_out.setZero();
    b_out.setZero();
}

double LstmParams::squared_norm() const {
    return W_ih.squaredNorm() + W_hh.squaredNorm() + b.squaredNorm() + W_out.squaredNorm() +
           b_out.squaredNorm();
}

LstmParams init_params(int input_dim, int hidden, int classes, std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1 || classes < 2)
        throw std::runtime_error("invalid LSTM dimensions");

    LstmParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.classes = classes;
    p.W_ih.resize(4 * hidden, input_dim);
    p.W_hh.resize(4 * hidden, hidden);
    p.b = VectorXd::Zero(4 * hidden);
    p.W_out = MatrixXd::Zero(classes, hidden);
    p.b_out = VectorXd::Zero(classes);

    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < p.W_ih.rows(); ++r)
        for (Eigen::Index c = 0; c < p.W_ih.cols(); ++c) p.W_ih(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < p.W_hh.rows(); ++r)
        for (Eigen::Index c = 0; c < p.W_hh.cols(); ++c) p.W_hh(r, c) = dist(rng);

    // Forget-gate bias +1 keeps early gradients alive.
    p.b.segment(hidden, hidden).setOnes();
    return p;
}

std::pair<VectorXd, VectorXd> cell_forward(const LstmParams& p, const VectorXd& x,
                                           const VectorXd& h, const VectorXd& c) {
    check_shapes(p);
    const int H = p.hidden;
    if (x.size() != p.input_dim || h.size() != H || c.size() != H)
        throw std::runtime_error("cell_forward input shape mismatch");

    VectorXd z = p.W_ih * x + p.W_hh * h + p.b;
    VectorXd c_new(H), h_new(H);
    for (int k = 0; k < H; ++k) {
        const double i = sigmoid(z[k]);
        const double f = sigmoid(z[H + k]);
        const double g = std::tanh(z[2 * H + k]);
        const double o = sigmoid(z[3 * H + k]);
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * std::tanh(c_new[k]);
    }
    return {std::move(h_new), std::move(c_new)};
}

VectorXd sequence_forward(const LstmParams& p, const MatrixXd& window) {
    check_shapes(p);
    if (window.rows() == 0) throw std::runtime_error("sequence_forward: empty window");
    if (window.cols() != p.input_dim)
        throw std::runtime_error("sequence_forward: window width != input_dim");

    const int H = p.hidden;
    VectorXd h = VectorXd::Zero(H);
    VectorXd c = VectorXd::Zero(H);
    VectorXd z(4 * H);
    for (Eigen::Index t = 0; t < window.rows(); ++t) {
        z.noalias() = p.W_ih * window.row(t).transpose();
        z.noalias() += p.W_hh * h;
        z += p.b;
        for (int k = 0; k < H; ++k) {
            const double i = sigmoid(z[k]);
            const double f = sigmoid(z[H + k]);
            const double g = std::tanh(z[2 * H + k]);
            const double o = sigmoid(z[3 * H + k]);
            c[k] = f * c[k] + i * g;
            h[k] = o * std::tanh(c[k]);
        }
    }

    VectorXd logits = p.W_out * h + p.b_out;
    logits.array() -= logits.maxCoeff();
    VectorXd probs = logits.array().exp();
    probs /= probs.sum();
    return probs;
}

std::pair<double, LstmParams> loss_and_grads(const LstmParams& p,
                                             const std::vector<TrainingExample>& batch) {
    check_shapes(p);
    if (batch.empty()) throw std::runtime_error("loss_and_grads: empty batch");

    const int H = p.hidden;
    const int C = p.classes;
    const int B = static_cast<int>(batch.size());
    const Eigen::Index L = batch.front().window.rows();
    double weight_sum = 0.0;
    for (int i = 0; i < B; ++i) {
        const TrainingExample& e = batch[i];
        if (e.window.rows() != L || e.window.cols() != p.input_dim)
            throw std::runtime_error("loss_and_grads: inconsistent window shape in batch");
        if (e.label < 0 || e.label >= C)
            throw std::runtime_error("loss_and_grads: label out of range");
        weight_sum += e.weight;
    }
    if (!(weight_sum > 0.0)) throw std::runtime_error("loss_and_grads: weights must sum > 0");

    // Batched forward, columns = examples. Per-step activations are kept for
    // the backward pass.
    std::vector<MatrixXd> X(L), I(L), F(L), G(L), O(L), Cst(L), TanhC(L), Hst(L);
    MatrixXd h = MatrixXd::Zero(H, B);
    MatrixXd c = MatrixXd::Zero(H, B);
    MatrixXd z(4 * H, B);

    for (Eigen::Index t = 0; t < L; ++t) {
        MatrixXd& x = X[t];
        x.resize(p.input_dim, B);
        for (int i = 0; i < B; ++i) x.col(i) = batch[i].window.row(t).transpose();

        z.noalias() = p.W_ih * x;
        z.noalias() += p.W_hh * h;
        z.colwise() += p.b;

        I[t] = (1.0 + (-z.topRows(H).array()).exp()).inverse();
        F[t] = (1.0 + (-z.middleRows(H, H).array()).exp()).inverse();
        G[t] = z.middleRows(2 * H, H).array().tanh();
        O[t] = (1.0 + (-z.middleRows(3 * H, H).array()).exp()).inverse();

        c = (F[t].array() * c.array() + I[t].array() * G[t].array()).matrix();
        Cst[t] = c;
        TanhC[t] = c.array().tanh();
        h = (O[t].array() * TanhC[t].array()).matrix();
        Hst[t] = h;
    }

    MatrixXd logits = p.W_out * h;
    logits.colwise() += p.b_out;
    MatrixXd probs(C, B);
    for (int i = 0; i < B; ++i) {
        VectorXd col = logits.col(i);
        col.array() -= col.maxCoeff();
        VectorXd e = col.array().exp();
        probs.col(i) = e / e.sum();
    }

    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        const double pi = probs(batch[i].label, i);
        const double nll = -std::log(pi);
        if (!std::isfinite(nll)) {
            std::ostringstream os;
            os << "non-finite loss at batch element " << i;
            throw std::runtime_error(os.str());
        }
        loss += batch[i].weight * nll;
    }
    loss /= weight_sum;

    // Backward.
    LstmParams g;
    g.input_dim = p.input_dim;
    g.hidden = H;
    g.classes = C;
    g.W_ih = MatrixXd::Zero(4 * H, p.input_dim);
    g.W_hh = MatrixXd::Zero(4 * H, H);
    g.b = VectorXd::Zero(4 * H);

    MatrixXd dlogits = probs;
    for (int i = 0; i < B; ++i) {
        dlogits(batch[i].label, i) -= 1.0;
        dlogits.col(i) *= batch[i].weight / weight_sum;
    }
    g.W_out = dlogits * h.transpose();
    g.b_out = dlogits.rowwise().sum();

    MatrixXd dH = p.W_out.transpose() * dlogits;
    MatrixXd dC = MatrixXd::Zero(H, B);
    MatrixXd dZ(4 * H, B);

    for (Eigen::Index t = L - 1; t >= 0; --t) {
        const MatrixXd& c_prev_m = (t > 0) ? Cst[t - 1] : dC;  // placeholder when t == 0
        const MatrixXd& h_prev = (t > 0) ? Hst[t - 1] : dC;

        const auto dO = (dH.array() * TanhC[t].array()).eval();
        dC.array() += dH.array() * O[t].array() * (1.0 - TanhC[t].array().square());

        const auto dI = (dC.array() * G[t].array()).eval();
        const auto dG = (dC.array() * I[t].array()).eval();

        dZ.topRows(H) = (dI * I[t].array() * (1.0 - I[t].array())).matrix();
        if (t > 0)
            dZ.middleRows(H, H) =
                ((dC.array() * c_prev_m.array()) * F[t].array() * (1.0 - F[t].array())).matrix();
        else
            dZ.middleRows(H, H).setZero();  // c_{-1} = 0, so dF contributes nothing
        dZ.middleRows(2 * H, H) = (dG * (1.0 - G[t].array().square())).matrix();
        dZ.middleRows(3 * H, H) = (dO * O[t].array() * (1.0 - O[t].array())).matrix();

        g.W_ih.noalias() += dZ * X[t].transpose();
        if (t > 0) g.W_hh.noalias() += dZ * h_prev.transpose();
        g.b += dZ.rowwise().sum();

        dH.noalias() = p.W_hh.transpose() * dZ;
        dC.array() *= F[t].array();
    }

    return {loss, std::move(g)};
}

MatrixXd batch_probs(const LstmParams& p, const std::vector<TrainingExample>& batch) {
    check_shapes(p);
    if (batch.empty()) throw std::runtime_error("batch_probs: empty batch");

    const int H = p.hidden;
    const int B = static_cast<int>(batch.size());
    const Eigen::Index L = batch.front().window.rows();
    for (const TrainingExample& e : batch)
        if (e.window.rows() != L || e.window.cols() != p.input_dim)
            throw std::runtime_error("batch_probs: inconsistent window shape in batch");

    MatrixXd h = MatrixXd::Zero(H, B);
    MatrixXd c = MatrixXd::Zero(H, B);
    MatrixXd x(p.input_dim, B), z(4 * H, B);
    for (Eigen::Index t = 0; t < L; ++t) {
        for (int i = 0; i < B; ++i) x.col(i) = batch[i].window.row(t).transpose();
        z.noalias() = p.W_ih * x;
        z.noalias() += p.W_hh * h;
        z.colwise() += p.b;

        const auto i_g = (1.0 + (-z.topRows(H).array()).exp()).inverse();
        const auto f_g = (1.0 + (-z.middleRows(H, H).array()).exp()).inverse();
        const auto g_g = z.middleRows(2 * H, H).array().tanh();
        const auto o_g = (1.0 + (-z.middleRows(3 * H, H).array()).exp()).inverse();
        c = (f_g * c.array() + i_g * g_g).matrix();
        h = (o_g * c.array().tanh()).matrix();
    }

    MatrixXd logits = p.W_out * h;
    logits.colwise() += p.b_out;
    MatrixXd probs(p.classes, B);
    for (int i = 0; i < B; ++i) {
        VectorXd col = logits.col(i);
        col.array() -= col.maxCoeff();
        VectorXd e = col.array().exp();
        probs.col(i) = e / e.sum();
    }
    return probs;
}

TrainState TrainState::for_params(const LstmParams& p) {
    TrainState s;
    s.m = p;
    s.m.set_zero();
    s.v = p;
    s.v.set_zero();
    return s;
}

namespace {

void adam_update(Eigen::Ref<MatrixXd> param, Eigen::Ref<MatrixXd> m, Eigen::Ref<MatrixXd> v,
                 const MatrixXd& grad, double lr, double bc1, double bc2) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * grad.array().square()).matrix();
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEpsilon);
}

}  // namespace

void optimizer_step(TrainState& s, LstmParams& p, const LstmParams& grads, double lr) {
    LstmParams g = grads;
    const double norm = std::sqrt(g.squared_norm());
    if (norm > kGradClipNorm) {
        const double scale = kGradClipNorm / norm;
        g.W_ih *= scale;
        g.W_hh *= scale;
        g.b *= scale;
        g.W_out *= scale;
        g.b_out *= scale;
    }

    ++s.step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(s.step));

    adam_update(p.W_ih, s.m.W_ih, s.v.W_ih, g.W_ih, lr, bc1, bc2);
    adam_update(p.W_hh, s.m.W_hh, s.v.W_hh, g.W_hh, lr, bc1, bc2);
    adam_update(p.W_out, s.m.W_out, s.v.W_out, g.W_out, lr, bc1, bc2);

    auto vec_update = [&](VectorXd& param, VectorXd& m, VectorXd& v, const VectorXd& grad) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
        v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * grad.array().square()).matrix();
        param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEpsilon);
    };
    vec_update(p.b, s.m.b, s.v.b, g.b);
    vec_update(p.b_out, s.m.b_out, s.v.b_out, g.b_out);
}

namespace {

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                          const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw std::runtime_error(std::string("model dimension mismatch in ") + name);
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw std::runtime_error(std::string("model dimension mismatch in ") + name);
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

VectorXd vector_from_json(const json& j, Eigen::Index size, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw std::runtime_error(std::string("model dimension mismatch in ") + name);
    VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
    check_shapes(m.params);
    json j;
    j["version"] = kModelFileVersion;
    j["profile"] = to_string(m.profile);
    j["input_dim"] = m.params.input_dim;
    j["hidden"] = m.params.hidden;
    j["classes"] = m.class_labels;
    j["norm"] = {{"mean", vector_to_json(m.norm.mean)}, {"std", vector_to_json(m.norm.std)}};
    j["weights"] = {{"W_ih", matrix_to_json(m.params.W_ih)},
                    {"W_hh", matrix_to_json(m.params.W_hh)},
                    {"b", vector_to_json(m.params.b)},
                    {"W_out", matrix_to_json(m.params.W_out)},
                    {"b_out", vector_to_json(m.params.b_out)}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << j.dump() << '\n';
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);

    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("corrupt model file " + path + ": " + e.what());
    }

    if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer())
        throw std::runtime_error("corrupt model file " + path + ": missing version");
    if (j["version"].get<int>() != kModelFileVersion) {
        std::ostringstream os;
        os << "unsupported version " << j["version"].get<int>() << " in model file " << path;
        throw std::runtime_error(os.str());
    }

    Model m;
    const std::string profile = j.at("profile").get<std::string>();
    if (profile == "A") m.profile = ModelProfile::A;
    else if (profile == "B") m.profile = ModelProfile::B;
    else throw std::runtime_error("corrupt model file: profile must be 'A' or 'B'");

    m.params.input_dim = j.at("input_dim").get<int>();
    m.params.hidden = j.at("hidden").get<int>();
    m.class_labels = j.at("classes").get<std::vector<int>>();
    m.params.classes = static_cast<int>(m.class_labels.size());
    if (m.params.input_dim < 1 || m.params.hidden < 1 || m.params.classes < 2)
        throw std::runtime_error("model dimension mismatch in header");

    const json& norm = j.at("norm");
    m.norm.mean = vector_from_json(norm.at("mean"), kFeatureDim, "norm.mean");
    m.norm.std = vector_from_json(norm.at("std"), kFeatureDim, "norm.std");

    const json& w = j.at("weights");
    const int H = m.params.hidden;
    m.params.W_ih = matrix_from_json(w.at("W_ih"), 4 * H, m.params.input_dim, "W_ih");
    m.params.W_hh = matrix_from_json(w.at("W_hh"), 4 * H, H, "W_hh");
    m.params.b = vector_from_json(w.at("b"), 4 * H, "b");
    m.params.W_out = matrix_from_json(w.at("W_out"), m.params.classes, H, "W_out");
    m.params.b_out = vector_from_json(w.at("b_out"), m.params.classes, "b_out");
    return m;
}

}  // namespace vrss
