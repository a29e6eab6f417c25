#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "vrss/detector.hpp"

namespace vrss {

struct ServiceConfig {
    std::string address = "127.0.0.1";
    int port = 0;              // 0 binds an ephemeral port; read back via port()
    std::size_t max_sessions = 8;
    // Backpressure guard: a frame whose timestamp advance is smaller than
    // 1/(rate_guard_factor * declared rate_hz) is rejected with a "rate_limit"
    // error and dropped; the connection stays open. Client timestamps (game
    // time) are used, not wall clock, so full-speed replays are never throttled.
    double rate_guard_factor = 2.0;
    // Per-connection detector settings; rate_hz is taken from each client's
    // hello instead.
    DetectorConfig detector;
};

struct ServiceStats {
    std::uint64_t connections = 0;
    std::uint64_t frames = 0;
    std::vector<double> frame_ms;  // per-frame handling time, receipt to last byte written
};

/// Streaming detection server: newline-delimited JSON over TCP, one detector
/// per connection, model parameters shared read-only across connections.
///
/// Per-connection protocol: the client sends hello (declaring its frame rate
/// and optionally which of the loaded models to run), the server acks; each
/// frame is pushed into the connection's detector and any resulting detection
/// events are written back; bye flushes the detector's pending tail inference
/// and closes. Protocol violations get an error message and a close; a too-fast
/// frame gets a "rate_limit" error but keeps the connection. A connection
/// beyond max_sessions is turned away with "busy".
class Service {
  public:
    Service(ServiceConfig cfg, std::vector<std::shared_ptr<const Model>> models);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds, listens, and starts the accept thread. Throws std::runtime_error
    /// if the address cannot be bound.
    void start();

    /// Shuts down the listener and all live connections, then joins every
    /// thread. Idempotent.
    void stop();

    /// Bound port (useful with port 0). Valid after start().
    int port() const { return port_; }

    ServiceStats stats() const;

  private:
    struct Conn {
        int fd = -1;
        std::thread thread;
        bool done = false;
    };

    void accept_loop();
    void handle(Conn* conn);
    void reap_finished();

    ServiceConfig cfg_;
    std::vector<std::shared_ptr<const Model>> models_;

    int listen_fd_ = -1;
    int port_ = 0;
    std::thread accept_thread_;
    bool running_ = false;

    mutable std::mutex mu_;  // guards conns_, sessions_, stats_
    std::vector<std::unique_ptr<Conn>> conns_;
    std::size_t sessions_ = 0;
    ServiceStats stats_;
};

}  // namespace vrss
