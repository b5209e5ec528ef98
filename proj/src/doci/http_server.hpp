#pragma once

#include <memory>
#include <string>
#include <thread>

#include "doci/service.hpp"

namespace httplib {
class Server;
}

namespace doci {

/// JSON/PNG HTTP front end of an InstrumentService.
///
///   GET  /api/status
///   PUT  /api/config              partial AcquisitionConfig patch
///   POST /api/mode                {"mode": "video" | "imaging" | "manual"}
///   GET  /api/frame?since=&timeout_ms=&format=png
///   POST /api/classify            classify request, see commands.hpp
///   GET  /api/raster?channel=&plane=
///
/// Errors are {"code": "...", "message": "..."}.
class HttpServer {
public:
    explicit HttpServer(InstrumentService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocks.
    void run();
    /// run() on a background thread.
    void start();
    /// Also stops the service, which releases pending long-polls.
    void stop();

private:
    InstrumentService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

int http_status_for(ErrorCode code);

}  // namespace doci
