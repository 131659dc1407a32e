#pragma once

#include <memory>
#include <string>

#include "aim/manager.hpp"

namespace aim {

// Handles one line of the wire protocol and returns the response JSON (no
// trailing newline). Requests:
//   {"op":"reserve","vehicle_id":str,"entry":str,"entry_window":[t0,t1],
//    "exit":str,"delta":num}
//   {"op":"limits","reservation_id":str,"state":[x,y,theta,v],"steer":num,
//    "time":num}
//   {"op":"release","reservation_id":str}
// Responses carry {"ok":true,...} or {"ok":false,"error":code,"margin":num}.
// Malformed input is answered, never thrown.
std::string handle_request_line(ReservationManager& manager, const std::string& line);

// Line-delimited JSON over TCP. Listens on the given port (0 picks an
// ephemeral one); each connection is served by its own thread.
class WireServer {
public:
  WireServer(ReservationManager& manager, int port);
  ~WireServer();

  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  int port() const;
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aim
