#pragma once

#include <memory>
#include <string>

#include "abaudit/service/node_service.hpp"

namespace abaudit::service {

// Serves POST /api/<endpoint> with a signed request body and GET /health.
// The path endpoint must match the one named in the body.
class HttpServer {
public:
    explicit HttpServer(NodeService& service);
    ~HttpServer();

    // Returns the bound port; pass 0 to pick a free one.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ServiceClient::Transport http_transport(const std::string& host, int port);

}  // namespace abaudit::service
