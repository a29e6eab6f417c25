#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vrss/telemetry.hpp"

namespace vrss::wire {

// Newline-delimited JSON, one message per line, UTF-8.
//   client -> server: hello, frame, bye
//   server -> client: ack, detection, error

struct ProtocolError : std::runtime_error {
    std::string code;
    ProtocolError(std::string c, const std::string& message)
        : std::runtime_error(message), code(std::move(c)) {}
};

struct Hello {
    std::string session_id;
    double rate_hz = 60.0;
    std::vector<ModelProfile> models;  // empty = every model the server loaded
};

enum class ClientMsgType { Hello, Frame, Bye };

struct ClientMsg {
    ClientMsgType type = ClientMsgType::Bye;
    Hello hello;  // set when type == Hello
    Frame frame;  // set when type == Frame
};

/// Parses one client line. Throws ProtocolError (code "bad_message" for
/// malformed JSON or unknown type, "bad_frame" for invalid frame fields,
/// "bad_hello" for invalid hello fields).
ClientMsg parse_client_line(const std::string& line);

std::string serialize_hello(const Hello& h);
std::string serialize_frame(const Frame& f);
std::string serialize_bye();

std::string serialize_ack(const std::string& session_id);
std::string serialize_detection(const DetectionEvent& e);
std::string serialize_error(const std::string& code, const std::string& message);

enum class ServerMsgType { Ack, Detection, Error };

struct ServerMsg {
    ServerMsgType type = ServerMsgType::Ack;
    std::string session_id;   // ack
    DetectionEvent detection; // detection
    std::string code, message;  // error
};

/// Parses one server line (for clients and tests).
ServerMsg parse_server_line(const std::string& line);

}  // namespace vrss::wire
