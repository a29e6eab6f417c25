// vrss: synth | train | eval | detect | serve
//
// Every subcommand also reads a JSON config file via --config; explicit flags
// win over config values, config values win over defaults.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrss/detector.hpp"
#include "vrss/eval.hpp"
#include "vrss/ingest.hpp"
#include "vrss/lstm.hpp"
#include "vrss/protocol.hpp"
#include "vrss/service.hpp"
#include "vrss/synthgen.hpp"
#include "vrss/trainer.hpp"

namespace {

using nlohmann::json;
using namespace vrss;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error(path + ": config must be a JSON object");
    return j;
}

// Applies a config value unless the matching flag was given on the command line.
template <typename T>
void cfg(const json& j, const CLI::App* sub, const char* flag, const char* key, T& out) {
    if (!j.contains(key)) return;
    if (flag && sub->count(flag) > 0) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::runtime_error(std::string("config key '") + key + "' has the wrong type");
    }
}

Perspective parse_perspective(const std::string& s) {
    if (s == "1PP") return Perspective::FirstPerson;
    if (s == "3PP") return Perspective::ThirdPerson;
    throw std::runtime_error("perspective must be '1PP' or '3PP', got '" + s + "'");
}

ModelProfile parse_profile(const std::string& s) {
    if (s == "A") return ModelProfile::A;
    if (s == "B") return ModelProfile::B;
    throw std::runtime_error("profile must be 'A' or 'B', got '" + s + "'");
}

std::vector<Session> load_sessions(const std::vector<std::string>& paths, double rate_hz,
                                   double gap_threshold_s) {
    std::vector<Session> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        RawRecording rec = parse_session_file(p);
        try {
            out.push_back(align_streams(rec, rate_hz, gap_threshold_s));
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(p + ": " + e.what());
        }
    }
    return out;
}

std::vector<std::shared_ptr<const Model>> load_models(const std::vector<std::string>& paths) {
    std::vector<std::shared_ptr<const Model>> models;
    for (const auto& p : paths) {
        auto m = std::make_shared<Model>(load_model(p));
        for (const auto& prev : models)
            if (prev->profile == m->profile)
                throw std::runtime_error("duplicate model profile " +
                                         std::string(to_string(m->profile)));
        models.push_back(std::move(m));
    }
    return models;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

// Detector/eval knobs shared by detect, serve, and eval.
struct DetectorFlags {
    int window_len = 120;
    int stride = 15;
    int raise_count = 3;
    int clear_count = 8;
    double theta_raise = 0.7;
    double theta_clear = 0.5;
    double blink_threshold = BlinkParams{}.openness_threshold;
    double blink_min_s = BlinkParams{}.min_duration_s;

    void add(CLI::App* sub) {
        sub->add_option("--window", window_len, "window length, frames")->check(CLI::Range(3, 100000));
        sub->add_option("--stride", stride, "inference stride, frames")->check(CLI::PositiveNumber);
        sub->add_option("--raise-count", raise_count, "consecutive positives to raise");
        sub->add_option("--clear-count", clear_count, "consecutive negatives to clear");
        sub->add_option("--theta-raise", theta_raise, "raise threshold");
        sub->add_option("--theta-clear", theta_clear, "clear threshold");
        sub->add_option("--blink-threshold", blink_threshold, "eye-openness blink threshold");
        sub->add_option("--blink-min", blink_min_s, "long-blink minimum duration, s");
    }

    void apply_config(const json& j, const CLI::App* sub) {
        cfg(j, sub, "--window", "window_len", window_len);
        cfg(j, sub, "--stride", "stride", stride);
        cfg(j, sub, "--raise-count", "raise_count", raise_count);
        cfg(j, sub, "--clear-count", "clear_count", clear_count);
        cfg(j, sub, "--theta-raise", "theta_raise", theta_raise);
        cfg(j, sub, "--theta-clear", "theta_clear", theta_clear);
        cfg(j, sub, "--blink-threshold", "blink_threshold", blink_threshold);
        cfg(j, sub, "--blink-min", "blink_min_s", blink_min_s);
    }

    DetectorConfig detector_config(double rate_hz) const {
        DetectorConfig dc;
        dc.rate_hz = rate_hz;
        dc.window_len = window_len;
        dc.stride = stride;
        dc.raise_count = raise_count;
        dc.clear_count = clear_count;
        dc.theta_raise = theta_raise;
        dc.theta_clear = theta_clear;
        dc.blink.openness_threshold = blink_threshold;
        dc.blink.min_duration_s = blink_min_s;
        return dc;
    }
};

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"real-time VR simulator-sickness detection toolkit"};
    app.require_subcommand(1);
    std::function<int()> action;

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled session");
    {
        auto spec = std::make_shared<SynthSpec>();
        auto out_path = std::make_shared<std::string>();
        auto persp = std::make_shared<std::string>("1PP");
        auto config_path = std::make_shared<std::string>();
        synth->add_option("-o,--output", *out_path, "output recording (JSONL), '-' for stdout")
            ->required();
        synth->add_option("--seed", spec->seed, "RNG seed");
        synth->add_option("--episodes", spec->n_episodes, "sickness episodes")->check(CLI::NonNegativeNumber);
        synth->add_option("--duration", spec->duration_s, "session length, s")->check(CLI::PositiveNumber);
        synth->add_option("--rate", spec->rate_hz, "frame rate, Hz")->check(CLI::PositiveNumber);
        synth->add_option("--perspective", *persp, "1PP or 3PP")
            ->check(CLI::IsMember({"1PP", "3PP"}));
        synth->add_option("--session-id", spec->session_id, "session id (default synth-<seed>)");
        synth->add_option("--eye-gain", spec->eye_gain,
                          "pre-onset gaze jitter variance gain (<=0: perspective default)");
        synth->add_option("--ramp-prob", spec->ramp_prob,
                          "per-episode chance of a gaze lead-up (<0: perspective default)");
        synth->add_option("--motion-intensity", spec->motion_intensity, "maneuver amplitude scale");
        synth->add_option("--config", *config_path, "JSON config (keys = SynthSpec fields)");
        synth->callback([&, spec, out_path, persp, config_path] {
            action = [=] {
                const json j = load_config(*config_path);
                spec->perspective = parse_perspective(*persp);
                cfg(j, synth, "--session-id", "session_id", spec->session_id);
                cfg(j, synth, nullptr, "game", spec->game);
                if (j.contains("perspective") && synth->count("--perspective") == 0)
                    spec->perspective = parse_perspective(j.at("perspective").get<std::string>());
                cfg(j, synth, "--duration", "duration_s", spec->duration_s);
                cfg(j, synth, "--rate", "rate_hz", spec->rate_hz);
                cfg(j, synth, "--episodes", "n_episodes", spec->n_episodes);
                cfg(j, synth, "--seed", "seed", spec->seed);
                cfg(j, synth, nullptr, "maneuver_len_s", spec->maneuver_len_s);
                cfg(j, synth, nullptr, "maneuver_to_pause_s", spec->maneuver_to_pause_s);
                cfg(j, synth, nullptr, "pre_ss_len_s", spec->pre_ss_len_s);
                cfg(j, synth, nullptr, "pause_min_s", spec->pause_min_s);
                cfg(j, synth, nullptr, "pause_max_s", spec->pause_max_s);
                cfg(j, synth, nullptr, "lead_in_s", spec->lead_in_s);
                cfg(j, synth, nullptr, "tail_s", spec->tail_s);
                cfg(j, synth, nullptr, "post_pause_gap_s", spec->post_pause_gap_s);
                cfg(j, synth, nullptr, "stop_ramp_s", spec->stop_ramp_s);
                cfg(j, synth, "--eye-gain", "eye_gain", spec->eye_gain);
                cfg(j, synth, "--ramp-prob", "ramp_prob", spec->ramp_prob);
                cfg(j, synth, nullptr, "jitter_sigma", spec->jitter_sigma);
                cfg(j, synth, nullptr, "jitter_revert_rate", spec->jitter_revert_rate);
                cfg(j, synth, nullptr, "fixation_sigma", spec->fixation_sigma);
                cfg(j, synth, nullptr, "fixation_revert_rate", spec->fixation_revert_rate);
                cfg(j, synth, nullptr, "vergence_rad", spec->vergence_rad);
                cfg(j, synth, "--motion-intensity", "motion_intensity", spec->motion_intensity);
                cfg(j, synth, nullptr, "base_speed", spec->base_speed);
                cfg(j, synth, nullptr, "speed_wobble", spec->speed_wobble);
                cfg(j, synth, nullptr, "speed_wobble_hz", spec->speed_wobble_hz);
                cfg(j, synth, nullptr, "turn_sigma", spec->turn_sigma);
                cfg(j, synth, nullptr, "turn_revert_rate", spec->turn_revert_rate);
                cfg(j, synth, nullptr, "speed_noise_sigma", spec->speed_noise_sigma);
                cfg(j, synth, nullptr, "speed_noise_revert_rate", spec->speed_noise_revert_rate);
                cfg(j, synth, nullptr, "maneuver_turn_amp", spec->maneuver_turn_amp);
                cfg(j, synth, nullptr, "maneuver_turn_hz", spec->maneuver_turn_hz);
                cfg(j, synth, nullptr, "bob_amp", spec->bob_amp);
                cfg(j, synth, nullptr, "bob_hz", spec->bob_hz);
                cfg(j, synth, nullptr, "blink_rate_per_min", spec->blink_rate_per_min);
                cfg(j, synth, nullptr, "blink_min_s", spec->blink_min_s);
                cfg(j, synth, nullptr, "blink_max_s", spec->blink_max_s);

                Session s = generate_session(*spec);
                RawRecording rec = to_recording(s);
                if (*out_path == "-") {
                    write_recording(std::cout, rec);
                } else {
                    auto out = open_out(*out_path);
                    write_recording(out, rec);
                }
                return 0;
            };
        });
    }

    // ---- train ----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train a model on recorded sessions");
    {
        auto tc = std::make_shared<TrainConfig>();
        auto paths = std::make_shared<std::vector<std::string>>();
        auto profile = std::make_shared<std::string>("A");
        auto model_out = std::make_shared<std::string>();
        auto history_out = std::make_shared<std::string>();
        auto config_path = std::make_shared<std::string>();
        auto rate = std::make_shared<double>(60.0);
        auto gap = std::make_shared<double>(0.25);
        train_cmd->add_option("sessions", *paths, "session recordings (JSONL)")
            ->required()
            ->expected(-2);
        train_cmd->add_option("--profile", *profile, "A (post-onset) or B (pre-onset)")
            ->check(CLI::IsMember({"A", "B"}));
        train_cmd->add_option("-o,--model", *model_out, "output model file")->required();
        train_cmd->add_option("--history", *history_out,
                              "training history CSV (default: <model>_history.csv)");
        train_cmd->add_option("--epochs", tc->epochs)->check(CLI::NonNegativeNumber);
        train_cmd->add_option("--batch", tc->batch_size)->check(CLI::PositiveNumber);
        train_cmd->add_option("--lr", tc->learning_rate)->check(CLI::PositiveNumber);
        train_cmd->add_option("--seed", tc->seed, "RNG seed");
        train_cmd->add_option("--hidden", tc->hidden)->check(CLI::PositiveNumber);
        train_cmd->add_option("--window", tc->window_len)->check(CLI::Range(3, 100000));
        train_cmd->add_option("--stride", tc->stride)->check(CLI::PositiveNumber);
        train_cmd->add_option("--split", tc->split_fraction, "training share of sessions");
        train_cmd->add_option("--patience", tc->patience, "early-stopping patience (0 = off)");
        train_cmd->add_option("--neg-per-pos", tc->neg_per_pos,
                              "cap on class-0 windows per positive (0 = keep all)");
        train_cmd->add_option("--pre-ss-len", tc->pre_ss_len_s, "pre-onset label window, s");
        train_cmd->add_option("--rate", *rate, "alignment frame rate, Hz");
        train_cmd->add_option("--gap-threshold", *gap, "max interpolatable stream gap, s");
        train_cmd->add_option("--config", *config_path, "JSON config");
        train_cmd->callback([&, tc, paths, profile, model_out, history_out, config_path, rate,
                             gap] {
            action = [=] {
                const json j = load_config(*config_path);
                if (j.contains("profile") && train_cmd->count("--profile") == 0)
                    *profile = j.at("profile").get<std::string>();
                tc->profile = parse_profile(*profile);
                cfg(j, train_cmd, "--epochs", "epochs", tc->epochs);
                cfg(j, train_cmd, "--batch", "batch_size", tc->batch_size);
                cfg(j, train_cmd, "--lr", "learning_rate", tc->learning_rate);
                cfg(j, train_cmd, "--seed", "seed", tc->seed);
                cfg(j, train_cmd, "--hidden", "hidden", tc->hidden);
                cfg(j, train_cmd, "--window", "window_len", tc->window_len);
                cfg(j, train_cmd, "--stride", "stride", tc->stride);
                cfg(j, train_cmd, "--split", "split_fraction", tc->split_fraction);
                cfg(j, train_cmd, "--patience", "patience", tc->patience);
                cfg(j, train_cmd, "--neg-per-pos", "neg_per_pos", tc->neg_per_pos);
                cfg(j, train_cmd, nullptr, "min_valid_fraction", tc->min_valid_fraction);
                cfg(j, train_cmd, "--pre-ss-len", "pre_ss_len_s", tc->pre_ss_len_s);
                cfg(j, train_cmd, nullptr, "blink_threshold", tc->blink.openness_threshold);
                cfg(j, train_cmd, nullptr, "blink_min_s", tc->blink.min_duration_s);
                cfg(j, train_cmd, "--rate", "rate_hz", *rate);
                cfg(j, train_cmd, "--gap-threshold", "gap_threshold_s", *gap);

                auto sessions = load_sessions(*paths, *rate, *gap);
                TrainResult result = train(sessions, *tc);
                save_model(result.model, *model_out);
                std::string hist = *history_out;
                if (hist.empty()) {
                    hist = *model_out;
                    const std::string ext = ".json";
                    if (hist.size() > ext.size() &&
                        hist.compare(hist.size() - ext.size(), ext.size(), ext) == 0)
                        hist.resize(hist.size() - ext.size());
                    hist += "_history.csv";
                }
                auto out = open_out(hist);
                write_history_csv(out, result.history);
                std::cout << "model " << to_string(tc->profile) << " -> " << *model_out << "\n";
                if (result.best_epoch >= 0)
                    std::cout << "best epoch " << result.best_epoch
                              << ", val balanced accuracy " << result.best_val_balanced_accuracy
                              << "\n";
                return 0;
            };
        });
    }

    // ---- eval -----------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on recorded sessions");
    {
        auto paths = std::make_shared<std::vector<std::string>>();
        auto model_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("text");
        auto config_path = std::make_shared<std::string>();
        auto rate = std::make_shared<double>(60.0);
        auto gap = std::make_shared<double>(0.25);
        auto hit_lead = std::make_shared<double>(1.0);
        auto pre_ss_len = std::make_shared<double>(kDefaultPreSsLenS);
        auto df = std::make_shared<DetectorFlags>();
        eval_cmd->add_option("sessions", *paths, "session recordings (JSONL)")
            ->required()
            ->expected(-1);
        eval_cmd->add_option("--model", *model_path, "model file")->required();
        eval_cmd->add_option("-o,--output", *out_path, "report file (default stdout)");
        eval_cmd->add_option("--format", *format, "text or csv")
            ->check(CLI::IsMember({"text", "csv"}));
        eval_cmd->add_option("--hit-lead", *hit_lead, "extra lead time accepted for a hit, s");
        eval_cmd->add_option("--pre-ss-len", *pre_ss_len, "pre-onset label window, s");
        eval_cmd->add_option("--rate", *rate, "alignment frame rate, Hz");
        eval_cmd->add_option("--gap-threshold", *gap, "max interpolatable stream gap, s");
        df->add(eval_cmd);
        eval_cmd->add_option("--config", *config_path, "JSON config");
        eval_cmd->callback([&, paths, model_path, out_path, format, config_path, rate, gap,
                            hit_lead, pre_ss_len, df] {
            action = [=] {
                const json j = load_config(*config_path);
                cfg(j, eval_cmd, "--hit-lead", "hit_lead_s", *hit_lead);
                cfg(j, eval_cmd, "--pre-ss-len", "pre_ss_len_s", *pre_ss_len);
                cfg(j, eval_cmd, "--rate", "rate_hz", *rate);
                cfg(j, eval_cmd, "--gap-threshold", "gap_threshold_s", *gap);
                if (j.contains("format") && eval_cmd->count("--format") == 0)
                    *format = j.at("format").get<std::string>();
                df->apply_config(j, eval_cmd);

                Model model = load_model(*model_path);
                auto sessions = load_sessions(*paths, *rate, *gap);
                EvalConfig ec;
                ec.window_len = df->window_len;
                ec.stride = df->stride;
                ec.pre_ss_len_s = *pre_ss_len;
                ec.hit_lead_s = *hit_lead;
                ec.raise_count = df->raise_count;
                ec.clear_count = df->clear_count;
                ec.theta_raise = df->theta_raise;
                ec.theta_clear = df->theta_clear;
                ec.blink.openness_threshold = df->blink_threshold;
                ec.blink.min_duration_s = df->blink_min_s;
                EvalReport report = evaluate(model, sessions, ec);
                const std::string text = render_report(
                    report, *format == "csv" ? ReportFormat::Csv : ReportFormat::Text);
                if (out_path->empty()) {
                    std::cout << text;
                } else {
                    auto out = open_out(*out_path);
                    out << text;
                }
                return 0;
            };
        });
    }

    // ---- detect ---------------------------------------------------------
    auto* detect_cmd = app.add_subcommand("detect", "replay a recording through the detector");
    {
        auto session_path = std::make_shared<std::string>();
        auto model_paths = std::make_shared<std::vector<std::string>>();
        auto out_path = std::make_shared<std::string>();
        auto config_path = std::make_shared<std::string>();
        auto rate = std::make_shared<double>(60.0);
        auto gap = std::make_shared<double>(0.25);
        auto df = std::make_shared<DetectorFlags>();
        detect_cmd->add_option("session", *session_path, "session recording (JSONL)")->required();
        detect_cmd->add_option("--model", *model_paths, "model file (repeat for A and B)")
            ->required()
            ->expected(-1);
        detect_cmd->add_option("-o,--output", *out_path, "event list file (default stdout)");
        detect_cmd->add_option("--rate", *rate, "alignment frame rate, Hz");
        detect_cmd->add_option("--gap-threshold", *gap, "max interpolatable stream gap, s");
        df->add(detect_cmd);
        detect_cmd->add_option("--config", *config_path, "JSON config");
        detect_cmd->callback([&, session_path, model_paths, out_path, config_path, rate, gap, df] {
            action = [=] {
                const json j = load_config(*config_path);
                cfg(j, detect_cmd, "--rate", "rate_hz", *rate);
                cfg(j, detect_cmd, "--gap-threshold", "gap_threshold_s", *gap);
                df->apply_config(j, detect_cmd);

                auto models = load_models(*model_paths);
                Session s = load_sessions({*session_path}, *rate, *gap).front();
                Detector det(models, df->detector_config(s.rate_hz));

                std::ofstream file;
                std::ostream* out = &std::cout;
                if (!out_path->empty()) {
                    file = open_out(*out_path);
                    out = &file;
                }
                for (const Frame& f : s.frames)
                    for (const DetectionEvent& e : det.push_frame(f))
                        *out << wire::serialize_detection(e) << "\n";
                for (const DetectionEvent& e : det.finish())
                    *out << wire::serialize_detection(e) << "\n";
                return 0;
            };
        });
    }

    // ---- serve ----------------------------------------------------------
    auto* serve_cmd = app.add_subcommand("serve", "run the streaming detection service");
    {
        auto sc = std::make_shared<ServiceConfig>();
        auto model_paths = std::make_shared<std::vector<std::string>>();
        auto config_path = std::make_shared<std::string>();
        auto df = std::make_shared<DetectorFlags>();
        sc->port = 7071;
        serve_cmd->add_option("--model", *model_paths, "model file (repeat for A and B)")
            ->required()
            ->expected(-1);
        serve_cmd->add_option("--address", sc->address, "listen address");
        serve_cmd->add_option("--port", sc->port, "listen port (0 = ephemeral)")
            ->check(CLI::Range(0, 65535));
        serve_cmd->add_option("--max-sessions", sc->max_sessions, "concurrent session cap");
        serve_cmd->add_option("--rate-guard-factor", sc->rate_guard_factor,
                              "reject frames faster than factor x declared rate");
        df->add(serve_cmd);
        serve_cmd->add_option("--config", *config_path, "JSON config");
        serve_cmd->callback([&, sc, model_paths, config_path, df] {
            action = [=] {
                const json j = load_config(*config_path);
                cfg(j, serve_cmd, "--address", "address", sc->address);
                cfg(j, serve_cmd, "--port", "port", sc->port);
                cfg(j, serve_cmd, "--max-sessions", "max_sessions", sc->max_sessions);
                cfg(j, serve_cmd, "--rate-guard-factor", "rate_guard_factor",
                    sc->rate_guard_factor);
                df->apply_config(j, serve_cmd);
                sc->detector = df->detector_config(sc->detector.rate_hz);

                auto models = load_models(*model_paths);
                Service service(*sc, std::move(models));
                service.start();
                std::cout << "listening on " << sc->address << ":" << service.port() << std::endl;

                std::signal(SIGINT, on_signal);
                std::signal(SIGTERM, on_signal);
                while (!g_stop)
                    std::this_thread::sleep_for(std::chrono::milliseconds(100));
                service.stop();
                return 0;
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        return action ? action() : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
