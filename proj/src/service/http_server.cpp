#include "abaudit/service/http_server.hpp"

#include <httplib.h>

#include "abaudit/core/errors.hpp"

namespace abaudit::service {

struct HttpServer::Impl {
    NodeService* service;
    httplib::Server server;
};

HttpServer::HttpServer(NodeService& service) : impl_(std::make_unique<Impl>()) {
    impl_->service = &service;
    auto* svc = &service;
    impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"ok":true})", "application/json");
    });
    impl_->server.Post(R"(/api/([a-z-]+))", [svc](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body, nullptr, false);
        if (!body.is_discarded() && body.is_object() && body.value("endpoint", "") != req.matches[1].str()) {
            body["endpoint"] = "path/body endpoint mismatch";
        }
        int status = 200;
        auto text = body.is_discarded() ? svc->handle_text(req.body, &status) : svc->handle_text(body.dump(), &status);
        res.status = status;
        res.set_content(text, "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

ServiceClient::Transport http_transport(const std::string& host, int port) {
    auto client = std::make_shared<httplib::Client>(host, port);
    auto mutex = std::make_shared<std::mutex>();
    return [client, mutex](const json& request) {
        std::lock_guard lock(*mutex);
        auto path = "/api/" + request.value("endpoint", std::string("unknown"));
        auto res = client->Post(path, request.dump(), "application/json");
        if (!res) throw Error("HTTP request failed: " + httplib::to_string(res.error()));
        auto body = json::parse(res->body, nullptr, false);
        if (body.is_discarded()) throw DecodeError("server returned non-JSON body");
        return body;
    };
}

}  // namespace abaudit::service
