#include "vrss/service.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>
#include <string>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "vrss/protocol.hpp"

namespace vrss {

namespace {

bool send_all(int fd, const std::string& line) {
    std::string buf = line;
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
        ssize_t n = ::send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

// Pulls newline-terminated lines out of a socket; recv errors and EOF both
// surface as "no more lines".
class LineReader {
  public:
    explicit LineReader(int fd) : fd_(fd) {}

    bool next(std::string& line) {
        for (;;) {
            auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                line.assign(buf_, 0, nl);
                buf_.erase(0, nl + 1);
                return true;
            }
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return false;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

  private:
    int fd_;
    std::string buf_;
};

}  // namespace

Service::Service(ServiceConfig cfg, std::vector<std::shared_ptr<const Model>> models)
    : cfg_(std::move(cfg)), models_(std::move(models)) {
    if (models_.empty()) throw std::runtime_error("service: no models loaded");
    for (const auto& m : models_)
        if (!m) throw std::runtime_error("service: null model");
}

Service::~Service() { stop(); }

void Service::start() {
    if (running_) return;

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("service: socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(cfg_.port));
    if (::inet_pton(AF_INET, cfg_.address.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("service: bad listen address " + cfg_.address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
        int err = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error(std::string("service: cannot listen on ") + cfg_.address + ": " +
                                 std::strerror(err));
    }

    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Service::stop() {
    if (!running_) return;
    running_ = false;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (accept_thread_.joinable()) accept_thread_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;

    {
        std::lock_guard<std::mutex> lock(mu_);
        for (auto& c : conns_)
            if (c->fd >= 0) ::shutdown(c->fd, SHUT_RDWR);
    }
    for (auto& c : conns_)
        if (c->thread.joinable()) c->thread.join();
    for (auto& c : conns_)
        if (c->fd >= 0) {
            ::close(c->fd);
            c->fd = -1;
        }
    conns_.clear();
}

ServiceStats Service::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

void Service::reap_finished() {
    // Caller holds no lock. Joins handler threads that already finished so a
    // long-lived server does not accumulate them.
    std::vector<std::unique_ptr<Conn>> dead;
    {
        std::lock_guard<std::mutex> lock(mu_);
        for (auto it = conns_.begin(); it != conns_.end();) {
            if ((*it)->done) {
                dead.push_back(std::move(*it));
                it = conns_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& c : dead) {
        if (c->thread.joinable()) c->thread.join();
        if (c->fd >= 0) ::close(c->fd);
    }
}

void Service::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener shut down
        }
        if (!running_) {
            ::close(fd);
            break;
        }
        reap_finished();

        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

        std::lock_guard<std::mutex> lock(mu_);
        if (sessions_ >= cfg_.max_sessions) {
            send_all(fd, wire::serialize_error("busy", "session limit reached"));
            ::close(fd);
            continue;
        }
        ++sessions_;
        ++stats_.connections;
        auto conn = std::make_unique<Conn>();
        conn->fd = fd;
        Conn* raw = conn.get();  // address is stable; only the unique_ptrs move
        conns_.push_back(std::move(conn));
        raw->thread = std::thread([this, raw] { handle(raw); });
    }
}

void Service::handle(Conn* conn) {
    const int fd = conn->fd;

    LineReader reader(fd);
    std::string line;
    bool have_hello = false;
    double rate_hz = 60.0;
    double last_t = 0.0;
    bool have_last_t = false;
    std::unique_ptr<Detector> detector;

    while (reader.next(line)) {
        if (line.empty()) continue;
        const auto t_start = std::chrono::steady_clock::now();

        wire::ClientMsg msg;
        try {
            msg = wire::parse_client_line(line);
        } catch (const wire::ProtocolError& e) {
            // Before hello, a broken frame is still fundamentally an
            // out-of-order message.
            if (!have_hello && e.code == "bad_frame")
                send_all(fd, wire::serialize_error("expected_hello", "expected hello"));
            else
                send_all(fd, wire::serialize_error(e.code, e.what()));
            break;
        }

        if (msg.type == wire::ClientMsgType::Hello) {
            if (have_hello) {
                send_all(fd, wire::serialize_error("bad_message", "duplicate hello"));
                break;
            }
            std::vector<std::shared_ptr<const Model>> selected;
            if (msg.hello.models.empty()) {
                selected = models_;
            } else {
                bool missing = false;
                for (ModelProfile p : msg.hello.models) {
                    bool found = false;
                    for (const auto& m : models_)
                        if (m->profile == p) {
                            selected.push_back(m);
                            found = true;
                            break;
                        }
                    if (!found) {
                        send_all(fd, wire::serialize_error(
                                         "model_unavailable",
                                         std::string("model ") + to_string(p) + " not loaded"));
                        missing = true;
                        break;
                    }
                }
                if (missing) break;
            }
            DetectorConfig dc = cfg_.detector;
            dc.rate_hz = msg.hello.rate_hz;
            try {
                detector = std::make_unique<Detector>(std::move(selected), dc);
            } catch (const std::exception& e) {
                send_all(fd, wire::serialize_error("bad_hello", e.what()));
                break;
            }
            rate_hz = msg.hello.rate_hz;
            have_hello = true;
            if (!send_all(fd, wire::serialize_ack(msg.hello.session_id))) break;
            continue;
        }

        if (msg.type == wire::ClientMsgType::Bye) {
            if (detector) {
                bool ok = true;
                for (const DetectionEvent& e : detector->finish())
                    if (!send_all(fd, wire::serialize_detection(e))) {
                        ok = false;
                        break;
                    }
                (void)ok;
            }
            break;
        }

        // Frame.
        if (!have_hello) {
            send_all(fd, wire::serialize_error("expected_hello", "expected hello"));
            break;
        }
        if (have_last_t && msg.frame.t - last_t < 1.0 / (cfg_.rate_guard_factor * rate_hz)) {
            if (msg.frame.t <= last_t) {
                send_all(fd, wire::serialize_error("bad_frame",
                                                   "frame timestamps must be strictly increasing"));
                break;
            }
            // Too fast for the declared rate: drop the frame, keep the session.
            if (!send_all(fd, wire::serialize_error("rate_limit", "frame rate above declared rate_hz")))
                break;
            continue;
        }

        std::vector<DetectionEvent> events;
        try {
            events = detector->push_frame(msg.frame);
        } catch (const std::exception& e) {
            send_all(fd, wire::serialize_error("bad_frame", e.what()));
            break;
        }
        last_t = msg.frame.t;
        have_last_t = true;

        bool write_failed = false;
        for (const DetectionEvent& e : events)
            if (!send_all(fd, wire::serialize_detection(e))) {
                write_failed = true;
                break;
            }

        const auto t_end = std::chrono::steady_clock::now();
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++stats_.frames;
            stats_.frame_ms.push_back(
                std::chrono::duration<double, std::milli>(t_end - t_start).count());
        }
        if (write_failed) break;
    }

    ::shutdown(fd, SHUT_RDWR);
    std::lock_guard<std::mutex> lock(mu_);
    --sessions_;
    conn->done = true;
}

}  // namespace vrss
