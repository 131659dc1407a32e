#include "aim/wire.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <mutex>
#include <thread>
#include <vector>

#include "json.hpp"

namespace aim {

namespace {

using nlohmann::json;

json failure(const std::string& code, double margin = 0.0) {
  return json{{"ok", false}, {"error", code}, {"margin", margin}};
}

json do_reserve(ReservationManager& manager, const json& req) {
  const auto& window = req.at("entry_window");
  if (!window.is_array() || window.size() != 2) {
    return failure("config");
  }
  ReserveOutcome out = manager.reserve(
      req.at("vehicle_id").get<std::string>(), req.at("entry").get<std::string>(),
      window[0].get<double>(), window[1].get<double>(),
      req.at("exit").get<std::string>(), req.at("delta").get<double>());
  if (!out.ok) return failure(out.error_code, out.margin);
  return json{{"ok", true},
              {"reservation_id", out.reservation_id},
              {"exit_window", json::array({out.exit_t0, out.exit_t1})}};
}

json do_limits(ReservationManager& manager, const json& req) {
  const auto& state = req.at("state");
  if (!state.is_array() || state.size() != 4) {
    return failure("config");
  }
  State z{state[0].get<double>(), state[1].get<double>(), state[2].get<double>(),
          state[3].get<double>()};
  HalfSpaceLimit limit =
      manager.query_limits(req.at("reservation_id").get<std::string>(), z,
                           req.at("steer").get<double>(), req.at("time").get<double>());
  return json{{"ok", true},           {"feasible", limit.feasible},
              {"a", limit.a},         {"b", limit.b},
              {"accel_min", limit.accel_min}, {"accel_max", limit.accel_max}};
}

json do_release(ReservationManager& manager, const json& req) {
  manager.release(req.at("reservation_id").get<std::string>());
  return json{{"ok", true}};
}

}  // namespace

std::string handle_request_line(ReservationManager& manager, const std::string& line) {
  json response;
  try {
    json req = json::parse(line);
    const std::string op = req.at("op").get<std::string>();
    if (op == "reserve") {
      response = do_reserve(manager, req);
    } else if (op == "limits") {
      response = do_limits(manager, req);
    } else if (op == "release") {
      response = do_release(manager, req);
    } else {
      response = failure("config");
    }
  } catch (const Error& e) {
    response = failure(e.code());
  } catch (const json::exception&) {
    response = failure("config");
  } catch (const std::exception&) {
    response = failure("internal");
  }
  return response.dump();
}

struct WireServer::Impl {
  ReservationManager& manager;
  int listen_fd = -1;
  int port = 0;
  std::atomic<bool> running{true};
  std::thread acceptor;
  std::mutex clients_mutex;
  std::vector<int> client_fds;
  std::vector<std::thread> workers;

  explicit Impl(ReservationManager& m) : manager(m) {}

  void serve_client(int fd) {
    std::string pending;
    char buf[4096];
    while (running.load()) {
      ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, pos);
        pending.erase(0, pos + 1);
        if (line.empty()) continue;
        std::string response = handle_request_line(manager, line) + "\n";
        std::size_t sent = 0;
        while (sent < response.size()) {
          ssize_t w = ::send(fd, response.data() + sent, response.size() - sent, 0);
          if (w <= 0) return;
          sent += static_cast<std::size_t>(w);
        }
      }
    }
  }

  void accept_loop() {
    while (running.load()) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) break;
      std::lock_guard<std::mutex> lock(clients_mutex);
      if (!running.load()) {
        ::close(fd);
        break;
      }
      client_fds.push_back(fd);
      workers.emplace_back([this, fd] {
        serve_client(fd);
        std::lock_guard<std::mutex> guard(clients_mutex);
        auto it = std::find(client_fds.begin(), client_fds.end(), fd);
        if (it != client_fds.end()) {
          client_fds.erase(it);
          ::close(fd);
        }
      });
    }
  }
};

WireServer::WireServer(ReservationManager& manager, int port)
    : impl_(std::make_unique<Impl>(manager)) {
  impl_->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (impl_->listen_fd < 0) throw IoError("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<unsigned short>(port));
  if (::bind(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(impl_->listen_fd, 16) < 0) {
    int saved = errno;
    ::close(impl_->listen_fd);
    throw IoError("bind/listen: " + std::string(std::strerror(saved)));
  }
  socklen_t len = sizeof addr;
  ::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  impl_->port = ntohs(addr.sin_port);
  impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

WireServer::~WireServer() { stop(); }

int WireServer::port() const { return impl_->port; }

void WireServer::stop() {
  if (!impl_->running.exchange(false)) return;
  ::shutdown(impl_->listen_fd, SHUT_RDWR);
  ::close(impl_->listen_fd);
  {
    std::lock_guard<std::mutex> lock(impl_->clients_mutex);
    for (int fd : impl_->client_fds) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
    impl_->client_fds.clear();
  }
  if (impl_->acceptor.joinable()) impl_->acceptor.join();
  std::lock_guard<std::mutex> lock(impl_->clients_mutex);
  for (auto& w : impl_->workers) {
    if (w.joinable()) w.join();
  }
  impl_->workers.clear();
}

}  // namespace aim
