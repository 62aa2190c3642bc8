#ifndef ISGP_SERVER_HPP
#define ISGP_SERVER_HPP

#include <memory>
#include <string>

#include "isgp/session.hpp"

namespace httplib {
class Server;
}

namespace isgp {

// JSON-over-HTTP front end for SessionManager.
//
//   POST /sessions                     create (body: session config)
//   POST /sessions/{id}/advance        {"idempotency_key"?}
//   POST /sessions/{id}/label          {"label", "allow_new"?, "query_id"?, "idempotency_key"?}
//   POST /sessions/{id}/challenge      {"label", "query_id"?, "idempotency_key"?}
//   GET  /sessions/{id}/state          state without grid
//   POST /sessions/{id}/state          {"grid": [[x, y], ...]}
//   GET  /sessions/{id}/snapshot       versioned model snapshot
//   GET  /health
//
// Errors come back as {"error": {"code", "message"}} with a 4xx status.
class SessionServer {
public:
    explicit SessionServer(SessionManager &manager);
    ~SessionServer();

    SessionServer(const SessionServer &) = delete;
    SessionServer &operator=(const SessionServer &) = delete;

    // Blocks until stop().
    bool listen(const std::string &host, int port);
    // Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_to_any_port(const std::string &host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    SessionManager &manager_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace isgp

#endif // ISGP_SERVER_HPP
