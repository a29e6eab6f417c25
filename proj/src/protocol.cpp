#include "vrss/protocol.hpp"

#include <json.hpp>

namespace vrss::wire {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const char* code, const std::string& what) {
    throw ProtocolError(code, what);
}

double get_num(const json& j, const char* field, const char* code) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number())
        bad(code, std::string("missing or non-numeric field '") + field + "'");
    return it->get<double>();
}

Vec3 get_vec3(const json& j, const char* field, const char* code) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_array() || it->size() != 3)
        bad(code, std::string("field '") + field + "' must be a 3-array");
    for (const auto& v : *it)
        if (!v.is_number()) bad(code, std::string("field '") + field + "' must be numeric");
    return {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
}

Vec3 get_unit_vec3(const json& j, const char* field, const char* code) {
    Vec3 v = get_vec3(j, field, code);
    auto u = check_unit(v);
    if (!u) bad(code, std::string("field '") + field + "' is not a unit vector");
    return *u;
}

double get_openness(const json& j, const char* field, const char* code) {
    double v = get_num(j, field, code);
    if (!(v >= 0.0 && v <= 1.0)) bad(code, std::string("field '") + field + "' out of [0,1]");
    return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json parse_object(const std::string& line, const char* code) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        bad(code, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad(code, "message is not a JSON object");
    return j;
}

std::string get_type(const json& j, const char* code) {
    auto it = j.find("type");
    if (it == j.end() || !it->is_string()) bad(code, "missing 'type'");
    return it->get<std::string>();
}

Frame parse_frame_fields(const json& j) {
    Frame f;
    f.t = get_num(j, "t", "bad_frame");
    f.eye.t = f.t;
    f.eye.gaze_l = get_unit_vec3(j, "gaze_l", "bad_frame");
    f.eye.gaze_r = get_unit_vec3(j, "gaze_r", "bad_frame");
    f.eye.gaze_c = get_unit_vec3(j, "gaze_c", "bad_frame");
    f.eye.open_l = get_openness(j, "open_l", "bad_frame");
    f.eye.open_r = get_openness(j, "open_r", "bad_frame");
    f.eye.pupil_l = get_num(j, "pupil_l", "bad_frame");
    f.eye.pupil_r = get_num(j, "pupil_r", "bad_frame");
    f.character.t = f.t;
    f.character.pos = get_vec3(j, "pos", "bad_frame");
    auto qit = j.find("quat");
    if (qit == j.end() || !qit->is_array() || qit->size() != 4)
        bad("bad_frame", "field 'quat' must be a 4-array");
    for (const auto& v : *qit)
        if (!v.is_number()) bad("bad_frame", "field 'quat' must be numeric");
    Quat q{(*qit)[0].get<double>(), (*qit)[1].get<double>(), (*qit)[2].get<double>(),
           (*qit)[3].get<double>()};
    auto u = check_unit(q);
    if (!u) bad("bad_frame", "field 'quat' is not a unit quaternion");
    f.character.quat = *u;
    return f;
}

Hello parse_hello_fields(const json& j) {
    Hello h;
    auto sid = j.find("session_id");
    if (sid == j.end() || !sid->is_string()) bad("bad_hello", "missing 'session_id'");
    h.session_id = sid->get<std::string>();
    h.rate_hz = get_num(j, "rate_hz", "bad_hello");
    if (!(h.rate_hz > 0.0)) bad("bad_hello", "'rate_hz' must be positive");
    auto mit = j.find("models");
    if (mit != j.end()) {
        if (!mit->is_array()) bad("bad_hello", "'models' must be an array");
        for (const auto& m : *mit) {
            if (!m.is_string()) bad("bad_hello", "'models' entries must be strings");
            const std::string s = m.get<std::string>();
            if (s == "A") h.models.push_back(ModelProfile::A);
            else if (s == "B") h.models.push_back(ModelProfile::B);
            else bad("bad_hello", "unknown model '" + s + "'");
        }
    }
    return h;
}

}  // namespace

ClientMsg parse_client_line(const std::string& line) {
    json j = parse_object(line, "bad_message");
    const std::string type = get_type(j, "bad_message");
    ClientMsg msg;
    if (type == "hello") {
        msg.type = ClientMsgType::Hello;
        msg.hello = parse_hello_fields(j);
    } else if (type == "frame") {
        msg.type = ClientMsgType::Frame;
        msg.frame = parse_frame_fields(j);
    } else if (type == "bye") {
        msg.type = ClientMsgType::Bye;
    } else {
        bad("bad_message", "unknown message type '" + type + "'");
    }
    return msg;
}

std::string serialize_hello(const Hello& h) {
    json models = json::array();
    for (ModelProfile p : h.models) models.push_back(to_string(p));
    json j{{"type", "hello"}, {"session_id", h.session_id}, {"rate_hz", h.rate_hz}};
    if (!h.models.empty()) j["models"] = models;
    return j.dump();
}

std::string serialize_frame(const Frame& f) {
    json j{{"type", "frame"},
           {"t", f.t},
           {"gaze_l", vec3_to_json(f.eye.gaze_l)},
           {"gaze_r", vec3_to_json(f.eye.gaze_r)},
           {"gaze_c", vec3_to_json(f.eye.gaze_c)},
           {"open_l", f.eye.open_l},
           {"open_r", f.eye.open_r},
           {"pupil_l", f.eye.pupil_l},
           {"pupil_r", f.eye.pupil_r},
           {"pos", vec3_to_json(f.character.pos)},
           {"quat", json::array({f.character.quat.w, f.character.quat.x, f.character.quat.y,
                                 f.character.quat.z})}};
    return j.dump();
}

std::string serialize_bye() { return json{{"type", "bye"}}.dump(); }

std::string serialize_ack(const std::string& session_id) {
    return json{{"type", "ack"}, {"session_id", session_id}}.dump();
}

std::string serialize_detection(const DetectionEvent& e) {
    json j{{"type", "detection"}, {"model", to_string(e.model)},
           {"event", to_string(e.event)}, {"kind", to_string(e.kind)},
           {"t", e.t},           {"confidence", e.confidence}};
    return j.dump();
}

std::string serialize_error(const std::string& code, const std::string& message) {
    return json{{"type", "error"}, {"code", code}, {"message", message}}.dump();
}

ServerMsg parse_server_line(const std::string& line) {
    json j = parse_object(line, "bad_message");
    const std::string type = get_type(j, "bad_message");
    ServerMsg msg;
    if (type == "ack") {
        msg.type = ServerMsgType::Ack;
        auto sid = j.find("session_id");
        if (sid == j.end() || !sid->is_string()) bad("bad_message", "ack missing 'session_id'");
        msg.session_id = sid->get<std::string>();
    } else if (type == "detection") {
        msg.type = ServerMsgType::Detection;
        auto str = [&](const char* field) {
            auto it = j.find(field);
            if (it == j.end() || !it->is_string())
                bad("bad_message", std::string("detection missing '") + field + "'");
            return it->get<std::string>();
        };
        const std::string model = str("model");
        if (model == "A") msg.detection.model = ModelProfile::A;
        else if (model == "B") msg.detection.model = ModelProfile::B;
        else bad("bad_message", "unknown model '" + model + "'");
        const std::string event = str("event");
        if (event == "pre_ss") msg.detection.event = DetectionType::PreSS;
        else if (event == "post_ss") msg.detection.event = DetectionType::PostSS;
        else bad("bad_message", "unknown event '" + event + "'");
        const std::string kind = str("kind");
        if (kind == "raised") msg.detection.kind = DetectionKind::Raised;
        else if (kind == "cleared") msg.detection.kind = DetectionKind::Cleared;
        else bad("bad_message", "unknown kind '" + kind + "'");
        msg.detection.t = get_num(j, "t", "bad_message");
        msg.detection.confidence = get_num(j, "confidence", "bad_message");
    } else if (type == "error") {
        msg.type = ServerMsgType::Error;
        msg.code = j.value("code", std::string{});
        msg.message = j.value("message", std::string{});
    } else {
        bad("bad_message", "unknown server message type '" + type + "'");
    }
    return msg;
}

}  // namespace vrss::wire
