#include "vrss/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vrss {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    std::ostringstream os;
    os << "line " << line_no << ": " << what;
    throw std::runtime_error(os.str());
}

double get_num(const json& j, const char* field, std::size_t line_no) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number()) fail(line_no, std::string("missing or non-numeric field '") + field + "'");
    return it->get<double>();
}

Vec3 get_vec3(const json& j, const char* field, std::size_t line_no) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_array() || it->size() != 3) fail(line_no, std::string("field '") + field + "' must be a 3-array");
    for (const auto& v : *it)
        if (!v.is_number()) fail(line_no, std::string("field '") + field + "' must be numeric");
    return {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
}

Vec3 get_unit_vec3(const json& j, const char* field, std::size_t line_no) {
    Vec3 v = get_vec3(j, field, line_no);
    auto u = check_unit(v);
    if (!u) fail(line_no, std::string("field '") + field + "' is not a unit vector");
    return *u;
}

double get_openness(const json& j, const char* field, std::size_t line_no) {
    double v = get_num(j, field, line_no);
    if (!(v >= 0.0 && v <= 1.0)) fail(line_no, std::string("field '") + field + "' out of [0,1]");
    return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

RawRecording parse_session(std::istream& in) {
    RawRecording rec;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    bool in_pause = false;
    double pause_start = 0.0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail(line_no, "record is not a JSON object");
        auto type_it = j.find("type");
        if (type_it == j.end() || !type_it->is_string()) fail(line_no, "missing 'type'");
        const std::string type = type_it->get<std::string>();

        if (!have_header) {
            if (type != "header") fail(line_no, "first record must be the header");
            auto sid = j.find("session_id");
            if (sid == j.end() || !sid->is_string()) fail(line_no, "missing 'session_id'");
            rec.session_id = sid->get<std::string>();
            rec.game = j.value("game", std::string{});
            const std::string persp = j.value("perspective", std::string{"1PP"});
            if (persp == "1PP") rec.perspective = Perspective::FirstPerson;
            else if (persp == "3PP") rec.perspective = Perspective::ThirdPerson;
            else fail(line_no, "perspective must be '1PP' or '3PP'");
            rec.eye_rate_hz = get_num(j, "eye_rate_hz", line_no);
            rec.char_rate_hz = get_num(j, "char_rate_hz", line_no);
            if (rec.eye_rate_hz <= 0.0 || rec.char_rate_hz <= 0.0)
                fail(line_no, "rates must be positive");
            have_header = true;
            continue;
        }

        if (type == "header") {
            fail(line_no, "duplicate header");
        } else if (type == "eye") {
            EyeSample e;
            e.t = get_num(j, "t", line_no);
            e.gaze_l = get_unit_vec3(j, "gaze_l", line_no);
            e.gaze_r = get_unit_vec3(j, "gaze_r", line_no);
            e.gaze_c = get_unit_vec3(j, "gaze_c", line_no);
            e.open_l = get_openness(j, "open_l", line_no);
            e.open_r = get_openness(j, "open_r", line_no);
            e.pupil_l = get_num(j, "pupil_l", line_no);
            e.pupil_r = get_num(j, "pupil_r", line_no);
            if (!rec.eye.empty() && e.t <= rec.eye.back().t)
                fail(line_no, "eye timestamps must be strictly increasing");
            rec.eye.push_back(e);
        } else if (type == "char") {
            CharacterSample c;
            c.t = get_num(j, "t", line_no);
            c.pos = get_vec3(j, "pos", line_no);
            auto qit = j.find("quat");
            if (qit == j.end() || !qit->is_array() || qit->size() != 4)
                fail(line_no, "field 'quat' must be a 4-array");
            Quat q{(*qit)[0].get<double>(), (*qit)[1].get<double>(), (*qit)[2].get<double>(),
                   (*qit)[3].get<double>()};
            auto u = check_unit(q);
            if (!u) fail(line_no, "field 'quat' is not a unit quaternion");
            c.quat = *u;
            if (!rec.character.empty() && c.t <= rec.character.back().t)
                fail(line_no, "char timestamps must be strictly increasing");
            rec.character.push_back(c);
        } else if (type == "pause_start") {
            if (in_pause) fail(line_no, "pause_start while a pause is already open");
            pause_start = get_num(j, "t", line_no);
            if (!rec.pauses.empty() && pause_start < rec.pauses.back().end)
                fail(line_no, "pause_start before previous pause ended");
            in_pause = true;
        } else if (type == "pause_end") {
            if (!in_pause) fail(line_no, "pause_end without matching pause_start");
            double t = get_num(j, "t", line_no);
            if (t <= pause_start) fail(line_no, "pause_end not after pause_start");
            rec.pauses.push_back({pause_start, t});
            in_pause = false;
        } else {
            ++rec.skipped_records;
        }
    }

    if (!have_header) throw std::runtime_error("missing header");
    if (in_pause) throw std::runtime_error("unterminated pause (missing pause_end)");
    return rec;
}

RawRecording parse_session_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open recording: " + path);
    try {
        return parse_session(in);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_recording(std::ostream& out, const RawRecording& r) {
    json header{{"type", "header"},
                {"session_id", r.session_id},
                {"game", r.game},
                {"perspective", to_string(r.perspective)},
                {"eye_rate_hz", r.eye_rate_hz},
                {"char_rate_hz", r.char_rate_hz}};
    out << header.dump() << '\n';

    // Interleave records in timestamp order so the file reads chronologically.
    std::size_t ei = 0, ci = 0, pi = 0;
    bool pause_open = false;
    auto next_pause_t = [&]() {
        if (pi >= r.pauses.size()) return std::numeric_limits<double>::infinity();
        return pause_open ? r.pauses[pi].end : r.pauses[pi].start;
    };
    while (ei < r.eye.size() || ci < r.character.size() || pi < r.pauses.size()) {
        double te = ei < r.eye.size() ? r.eye[ei].t : std::numeric_limits<double>::infinity();
        double tc = ci < r.character.size() ? r.character[ci].t
                                            : std::numeric_limits<double>::infinity();
        double tp = next_pause_t();
        if (tp <= te && tp <= tc) {
            if (!pause_open) {
                out << json{{"type", "pause_start"}, {"t", r.pauses[pi].start}}.dump() << '\n';
                pause_open = true;
            } else {
                out << json{{"type", "pause_end"}, {"t", r.pauses[pi].end}}.dump() << '\n';
                pause_open = false;
                ++pi;
            }
        } else if (te <= tc) {
            const EyeSample& e = r.eye[ei++];
            json j{{"type", "eye"},       {"t", e.t},
                   {"gaze_l", vec3_to_json(e.gaze_l)}, {"gaze_r", vec3_to_json(e.gaze_r)},
                   {"gaze_c", vec3_to_json(e.gaze_c)}, {"open_l", e.open_l},
                   {"open_r", e.open_r},  {"pupil_l", e.pupil_l},
                   {"pupil_r", e.pupil_r}};
            out << j.dump() << '\n';
        } else {
            const CharacterSample& c = r.character[ci++];
            json j{{"type", "char"},
                   {"t", c.t},
                   {"pos", vec3_to_json(c.pos)},
                   {"quat", json::array({c.quat.w, c.quat.x, c.quat.y, c.quat.z})}};
            out << j.dump() << '\n';
        }
    }
}

RawRecording to_recording(const Session& s) {
    RawRecording r;
    r.session_id = s.session_id;
    r.game = s.game;
    r.perspective = s.perspective;
    r.eye_rate_hz = s.rate_hz;
    r.char_rate_hz = s.rate_hz;
    r.eye.reserve(s.frames.size());
    r.character.reserve(s.frames.size());
    for (const Frame& f : s.frames) {
        r.eye.push_back(f.eye);
        r.character.push_back(f.character);
    }
    r.pauses = s.pauses;
    return r;
}

namespace {

// Bracketing index: largest i with samples[i].t <= t (samples sorted).
template <typename S>
std::size_t bracket(const std::vector<S>& samples, double t, std::size_t hint) {
    std::size_t i = hint;
    while (i + 1 < samples.size() && samples[i + 1].t <= t) ++i;
    return i;
}

double lerp(double a, double b, double u) { return a + u * (b - a); }

Vec3 lerp(const Vec3& a, const Vec3& b, double u) {
    return {lerp(a.x, b.x, u), lerp(a.y, b.y, u), lerp(a.z, b.z, u)};
}

// At u == 0 the sample itself comes back bit-exact (no renormalization), so
// aligning an already-on-grid recording is the identity.
Vec3 lerp_unit(const Vec3& a, const Vec3& b, double u) {
    if (u == 0.0) return a;
    Vec3 v = lerp(a, b, u);
    double n = v.norm();
    if (n < 1e-9) return a;  // antipodal degenerate; keep the earlier direction
    return v / n;
}

// Normalized linear interpolation along the shorter arc.
Quat nlerp(const Quat& a, Quat b, double u) {
    if (u == 0.0) return a;
    if (a.dot(b) < 0.0) b = {-b.w, -b.x, -b.y, -b.z};
    Quat q{lerp(a.w, b.w, u), lerp(a.x, b.x, u), lerp(a.y, b.y, u), lerp(a.z, b.z, u)};
    return q.normalized();
}

template <typename S>
void collect_gaps(const std::vector<S>& samples, double threshold_s,
                  std::vector<TimeInterval>& out) {
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if (samples[i + 1].t - samples[i].t > threshold_s)
            out.push_back({samples[i].t, samples[i + 1].t});
}

std::vector<TimeInterval> merge_intervals(std::vector<TimeInterval> v) {
    if (v.empty()) return v;
    std::sort(v.begin(), v.end(),
              [](const TimeInterval& a, const TimeInterval& b) { return a.start < b.start; });
    std::vector<TimeInterval> out{v.front()};
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i].start <= out.back().end)
            out.back().end = std::max(out.back().end, v[i].end);
        else
            out.push_back(v[i]);
    }
    return out;
}

}  // namespace

Session align_streams(const RawRecording& r, double target_rate_hz, double gap_threshold_s) {
    if (target_rate_hz <= 0.0) throw std::runtime_error("target rate must be positive");
    if (r.eye.size() < 2 || r.character.size() < 2)
        throw std::runtime_error("each stream needs at least 2 samples");

    const double t0 = std::max(r.eye.front().t, r.character.front().t);
    const double t1 = std::min(r.eye.back().t, r.character.back().t);
    if (t1 < t0) throw std::runtime_error("streams do not overlap in time");

    // Half-open span [t0, t1): the frame grid stops just short of t1, with a
    // 1e-9 slack so an exactly-integral span*rate is not truncated by fp noise.
    const double span = t1 - t0;
    const std::size_t n_frames =
        static_cast<std::size_t>(std::floor(span * target_rate_hz - 1e-9)) + 1;

    Session s;
    s.session_id = r.session_id;
    s.game = r.game;
    s.perspective = r.perspective;
    s.rate_hz = target_rate_hz;
    s.frames.reserve(n_frames);

    std::size_t ei = 0, ci = 0;
    for (std::size_t k = 0; k < n_frames; ++k) {
        const double t = t0 + static_cast<double>(k) / target_rate_hz;

        ei = bracket(r.eye, t, ei);
        const EyeSample& ea = r.eye[ei];
        const EyeSample& eb = r.eye[std::min(ei + 1, r.eye.size() - 1)];
        const double eu = (eb.t > ea.t) ? (t - ea.t) / (eb.t - ea.t) : 0.0;

        ci = bracket(r.character, t, ci);
        const CharacterSample& ca = r.character[ci];
        const CharacterSample& cb = r.character[std::min(ci + 1, r.character.size() - 1)];
        const double cu = (cb.t > ca.t) ? (t - ca.t) / (cb.t - ca.t) : 0.0;

        Frame f;
        f.t = t;
        f.eye.t = t;
        f.eye.gaze_l = lerp_unit(ea.gaze_l, eb.gaze_l, eu);
        f.eye.gaze_r = lerp_unit(ea.gaze_r, eb.gaze_r, eu);
        f.eye.gaze_c = lerp_unit(ea.gaze_c, eb.gaze_c, eu);
        f.eye.open_l = lerp(ea.open_l, eb.open_l, eu);
        f.eye.open_r = lerp(ea.open_r, eb.open_r, eu);
        f.eye.pupil_l = lerp(ea.pupil_l, eb.pupil_l, eu);
        f.eye.pupil_r = lerp(ea.pupil_r, eb.pupil_r, eu);
        f.character.t = t;
        f.character.pos = lerp(ca.pos, cb.pos, cu);
        f.character.quat = nlerp(ca.quat, cb.quat, cu);
        s.frames.push_back(f);
    }

    // Pauses clipped to the aligned span.
    const double last_t = s.frames.back().t;
    for (TimeInterval p : r.pauses) {
        p.start = std::max(p.start, t0);
        p.end = std::min(p.end, last_t + 1.0 / target_rate_hz);
        if (p.end > p.start) s.pauses.push_back(p);
    }

    std::vector<TimeInterval> gaps;
    collect_gaps(r.eye, gap_threshold_s, gaps);
    collect_gaps(r.character, gap_threshold_s, gaps);
    s.gap_intervals = merge_intervals(std::move(gaps));
    return s;
}

}  // namespace vrss
