#include "vrss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "vrss/features.hpp"

namespace vrss {

namespace {

int class_index_of(const std::vector<int>& class_labels, EventLabel l) {
    for (std::size_t i = 0; i < class_labels.size(); ++i)
        if (class_labels[i] == static_cast<int>(l)) return static_cast<int>(i);
    return -1;
}

struct Accumulator {
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t windows = 0;
    std::size_t episodes = 0, hits = 0, raises = 0;
    double latency_sum = 0.0;
    double duration_s = 0.0;

    explicit Accumulator(std::size_t c)
        : confusion(c, std::vector<std::size_t>(c, 0)) {}

    void add(const Accumulator& o) {
        for (std::size_t i = 0; i < confusion.size(); ++i)
            for (std::size_t j = 0; j < confusion.size(); ++j)
                confusion[i][j] += o.confusion[i][j];
        windows += o.windows;
        episodes += o.episodes;
        hits += o.hits;
        raises += o.raises;
        latency_sum += o.latency_sum;
        duration_s += o.duration_s;
    }
};

void eval_frames(const Model& model, const Session& s, const EvalConfig& cfg,
                 Accumulator& acc) {
    auto feats = extract_features(s.frames, s.rate_hz, s.gap_intervals);
    const auto blinks = detect_blinks(s.frames, s.rate_hz, cfg.blink);

    std::vector<double> ts(s.frames.size());
    for (std::size_t i = 0; i < s.frames.size(); ++i) ts[i] = s.frames[i].t;
    const auto series = apply_blink_countermeasure(
        ts, label_frames(ts, s.pauses, cfg.pre_ss_len_s), blinks);
    apply_feature_hold(feats, blinks);

    const auto normed = normalize(feats, model.norm);
    const auto L = static_cast<std::size_t>(cfg.window_len);

    std::vector<TrainingExample> batch;
    std::vector<int> truth;
    for (Window& w : make_windows(normed, L, static_cast<std::size_t>(cfg.stride))) {
        const EventLabel fl = series.labels[w.start_index + L - 1];
        const int ci = class_index_of(model.class_labels, fl);
        if (ci < 0) continue;
        if (!window_usable(w, fl, cfg.min_valid_fraction)) continue;
        batch.push_back({std::move(w.features), ci, 1.0});
        truth.push_back(ci);
    }
    if (batch.empty()) return;

    constexpr std::size_t kChunk = 256;
    for (std::size_t i = 0; i < batch.size(); i += kChunk) {
        const std::size_t n = std::min(kChunk, batch.size() - i);
        std::vector<TrainingExample> chunk(batch.begin() + i, batch.begin() + i + n);
        const Eigen::MatrixXd probs = batch_probs(model.params, chunk);
        for (std::size_t j = 0; j < n; ++j) {
            Eigen::Index pred;
            probs.col(j).maxCoeff(&pred);
            ++acc.confusion[static_cast<std::size_t>(truth[i + j])]
                           [static_cast<std::size_t>(pred)];
            ++acc.windows;
        }
    }
}

void eval_events(const Model& model, const Session& s, const EvalConfig& cfg,
                 Accumulator& acc) {
    DetectorConfig dc;
    dc.rate_hz = s.rate_hz;
    dc.window_len = cfg.window_len;
    dc.stride = cfg.stride;
    dc.raise_count = cfg.raise_count;
    dc.clear_count = cfg.clear_count;
    dc.theta_raise = cfg.theta_raise;
    dc.theta_clear = cfg.theta_clear;
    dc.blink = cfg.blink;

    Detector det({model}, dc);
    std::vector<double> raise_ts;
    auto collect = [&](const std::vector<DetectionEvent>& evs) {
        for (const DetectionEvent& e : evs)
            if (e.kind == DetectionKind::Raised) raise_ts.push_back(e.t);
    };
    for (const Frame& f : s.frames) collect(det.push_frame(f));
    collect(det.finish());

    acc.episodes += s.pauses.size();
    acc.raises += raise_ts.size();
    if (!s.frames.empty())
        acc.duration_s += s.frames.back().t - s.frames.front().t;

    // Greedy chronological matching: each raise may hit the first episode
    // whose window contains it and that has not been hit yet.
    std::vector<bool> matched(s.pauses.size(), false);
    for (double t : raise_ts) {
        for (std::size_t i = 0; i < s.pauses.size(); ++i) {
            if (matched[i]) continue;
            const double lo = s.pauses[i].start - cfg.pre_ss_len_s - cfg.hit_lead_s;
            if (t >= lo && t <= s.pauses[i].end) {
                matched[i] = true;
                ++acc.hits;
                acc.latency_sum += t - s.pauses[i].start;
                break;
            }
        }
    }
}

Metrics finish_metrics(const Model& model, const Accumulator& acc) {
    Metrics m;
    m.class_labels = model.class_labels;
    m.confusion = acc.confusion;
    m.windows = acc.windows;
    m.duration_min = acc.duration_s / 60.0;

    const std::size_t c = m.class_labels.size();
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t i = 0; i < c; ++i) {
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < c; ++j) {
            row += acc.confusion[i][j];
            col += acc.confusion[j][i];
        }
        ClassMetrics cm;
        cm.label = m.class_labels[i];
        const double tp = static_cast<double>(acc.confusion[i][i]);
        cm.recall = row ? tp / static_cast<double>(row) : 0.0;
        cm.precision = col ? tp / static_cast<double>(col) : 0.0;
        cm.f1 = (cm.precision + cm.recall > 0.0)
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
        m.per_class.push_back(cm);
        if (row) {
            recall_sum += cm.recall;
            ++present;
        }
    }
    m.balanced_accuracy = present ? recall_sum / static_cast<double>(present) : 0.0;

    m.events.episodes = acc.episodes;
    m.events.hits = acc.hits;
    m.events.total_raises = acc.raises;
    m.events.hit_rate =
        acc.episodes ? static_cast<double>(acc.hits) / static_cast<double>(acc.episodes) : 0.0;
    m.events.false_per_min =
        m.duration_min > 0.0
            ? static_cast<double>(acc.raises - acc.hits) / m.duration_min
            : 0.0;
    m.events.mean_latency_s =
        acc.hits ? acc.latency_sum / static_cast<double>(acc.hits) : 0.0;
    return m;
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<Session>& sessions,
                    const EvalConfig& cfg) {
    if (sessions.empty()) throw std::runtime_error("evaluate: no sessions");
    if (model.params.input_dim != kFeatureDim)
        throw std::runtime_error("evaluate: model/feature dimension mismatch");

    const std::size_t c = model.class_labels.size();
    Accumulator overall(c);
    Accumulator acc_1pp(c), acc_3pp(c);
    bool any_1pp = false, any_3pp = false;

    for (const Session& s : sessions) {
        Accumulator one(c);
        eval_frames(model, s, cfg, one);
        eval_events(model, s, cfg, one);
        overall.add(one);
        if (s.perspective == Perspective::FirstPerson) {
            acc_1pp.add(one);
            any_1pp = true;
        } else {
            acc_3pp.add(one);
            any_3pp = true;
        }
    }

    EvalReport report;
    report.profile = model.profile;
    report.hit_lead_s = cfg.hit_lead_s;
    report.overall = finish_metrics(model, overall);
    if (any_1pp)
        report.by_perspective.emplace_back(Perspective::FirstPerson,
                                           finish_metrics(model, acc_1pp));
    if (any_3pp)
        report.by_perspective.emplace_back(Perspective::ThirdPerson,
                                           finish_metrics(model, acc_3pp));
    return report;
}

namespace {

void render_text_block(std::ostream& os, const Metrics& m) {
    const std::size_t c = m.class_labels.size();
    os << "windows " << m.windows << "\n";
    os << "confusion (rows true, cols predicted):\n";
    os << "        ";
    for (std::size_t j = 0; j < c; ++j) os << std::setw(10) << ("pred " + std::to_string(m.class_labels[j]));
    os << "\n";
    for (std::size_t i = 0; i < c; ++i) {
        os << "true " << std::setw(3) << m.class_labels[i];
        for (std::size_t j = 0; j < c; ++j) os << std::setw(10) << m.confusion[i][j];
        os << "\n";
    }
    os << std::fixed << std::setprecision(4);
    for (const ClassMetrics& cm : m.per_class)
        os << "class " << cm.label << ": precision " << cm.precision << "  recall " << cm.recall
           << "  f1 " << cm.f1 << "\n";
    os << "balanced_accuracy " << m.balanced_accuracy << "\n";
    os << "events: episodes " << m.events.episodes << "  hits " << m.events.hits
       << "  raises " << m.events.total_raises << "\n";
    os << "hit_rate " << m.events.hit_rate << "  false_per_min " << m.events.false_per_min
       << "  mean_latency_s " << m.events.mean_latency_s << "\n";
    os.unsetf(std::ios_base::floatfield);
}

void render_csv_block(std::ostream& os, const std::string& scope, const Metrics& m) {
    const std::size_t c = m.class_labels.size();
    os << scope << ".windows," << m.windows << "\n";
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            os << scope << ".confusion_t" << m.class_labels[i] << "_p" << m.class_labels[j] << ","
               << m.confusion[i][j] << "\n";
    for (const ClassMetrics& cm : m.per_class) {
        os << scope << ".precision_" << cm.label << "," << cm.precision << "\n";
        os << scope << ".recall_" << cm.label << "," << cm.recall << "\n";
        os << scope << ".f1_" << cm.label << "," << cm.f1 << "\n";
    }
    os << scope << ".balanced_accuracy," << m.balanced_accuracy << "\n";
    os << scope << ".episodes," << m.events.episodes << "\n";
    os << scope << ".hits," << m.events.hits << "\n";
    os << scope << ".total_raises," << m.events.total_raises << "\n";
    os << scope << ".hit_rate," << m.events.hit_rate << "\n";
    os << scope << ".false_per_min," << m.events.false_per_min << "\n";
    os << scope << ".mean_latency_s," << m.events.mean_latency_s << "\n";
    os << scope << ".duration_min," << m.duration_min << "\n";
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    std::ostringstream os;
    if (format == ReportFormat::Text) {
        os << "== model " << to_string(report.profile) << " ("
           << to_string(report.profile == ModelProfile::A ? DetectionType::PostSS
                                                          : DetectionType::PreSS)
           << ") ==\n";
        os << "(event hit window opens " << std::fixed << std::setprecision(4)
           << report.hit_lead_s << " s before the pre-onset window)\n";
        os.unsetf(std::ios_base::floatfield);
        render_text_block(os, report.overall);
        for (const auto& [persp, m] : report.by_perspective) {
            os << "-- perspective " << to_string(persp) << " --\n";
            render_text_block(os, m);
        }
    } else {
        os.precision(17);
        os << "name,value\n";
        render_csv_block(os, "overall", report.overall);
        for (const auto& [persp, m] : report.by_perspective)
            render_csv_block(os, to_string(persp), m);
    }
    return os.str();
}

}  // namespace vrss
