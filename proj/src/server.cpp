#include "isgp/server.hpp"

#include <httplib.h>

namespace isgp {

namespace {

void send_json(httplib::Response &res, const nlohmann::json &body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response &res, const std::string &code, const std::string &message, int status) {
    send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

nlohmann::json parse_body(const httplib::Request &req) {
    if (req.body.empty()) {
        return nlohmann::json::object();
    }
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception &e) {
        throw SessionError("bad_request", std::string("malformed JSON body: ") + e.what(), 400);
    }
}

template<class Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request &req, httplib::Response &res) {
        try {
            handler(req, res);
        } catch (const SessionError &e) {
            send_error(res, e.code(), e.what(), e.status());
        } catch (const nlohmann::json::exception &e) {
            send_error(res, "bad_request", e.what(), 400);
        } catch (const std::invalid_argument &e) {
            send_error(res, "bad_request", e.what(), 400);
        } catch (const std::exception &e) {
            send_error(res, "internal", e.what(), 500);
        }
    };
}

std::vector<FeatureVector> parse_grid(const nlohmann::json &body) {
    std::vector<FeatureVector> grid;
    if (!body.contains("grid")) {
        return grid;
    }
    for (const auto &p : body.at("grid")) {
        const auto values = p.get<std::vector<double>>();
        grid.emplace_back(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    return grid;
}

} // namespace

SessionServer::SessionServer(SessionManager &manager)
    : manager_(manager), server_(std::make_unique<httplib::Server>()) {
    auto &srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(.*)", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });

    srv.Get("/health", [](const httplib::Request &, httplib::Response &res) { send_json(res, {{"status", "ok"}}); });

    srv.Post("/sessions", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 const auto id = manager_.create(parse_body(req));
                 auto state = manager_.state(id);
                 send_json(res, {{"session_id", id}, {"phase", state.at("phase")}}, 201);
             }));
    srv.Post("/sessions/:id/advance", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send_json(res, manager_.advance(req.path_params.at("id"), parse_body(req)));
             }));
    srv.Post("/sessions/:id/label", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send_json(res, manager_.submit_label(req.path_params.at("id"), parse_body(req)));
             }));
    srv.Post("/sessions/:id/challenge", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send_json(res, manager_.resolve_challenge(req.path_params.at("id"), parse_body(req)));
             }));
    srv.Get("/sessions/:id/state", guarded([this](const httplib::Request &req, httplib::Response &res) {
                send_json(res, manager_.state(req.path_params.at("id")));
            }));
    srv.Post("/sessions/:id/state", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send_json(res, manager_.state(req.path_params.at("id"), parse_grid(parse_body(req))));
             }));
    srv.Get("/sessions/:id/snapshot", guarded([this](const httplib::Request &req, httplib::Response &res) {
                send_json(res, manager_.snapshot(req.path_params.at("id")));
            }));
}

SessionServer::~SessionServer() {
    stop();
}

bool SessionServer::listen(const std::string &host, int port) {
    return server_->listen(host, port);
}

int SessionServer::bind_to_any_port(const std::string &host) {
    return server_->bind_to_any_port(host);
}

bool SessionServer::listen_after_bind() {
    return server_->listen_after_bind();
}

void SessionServer::wait_until_ready() const {
    server_->wait_until_ready();
}

void SessionServer::stop() {
    if (server_) {
        server_->stop();
    }
}

} // namespace isgp
