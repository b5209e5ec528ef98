#include "doci/http_server.hpp"

#include <httplib.h>

#include <boost/beast/core/detail/base64.hpp>

namespace doci {

namespace {

constexpr int kMaxPollMs = 30000;

std::string base64(const std::vector<std::uint8_t>& bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, {{"code", error_code_name(code)}, {"message", message}}, http_status_for(code));
}

Json body_json(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    return parse_json(req.body, "request body");
}

long long int_param(const httplib::Request& req, const char* name, long long fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, std::string("query parameter ") + name + " must be an integer");
}

// Wraps a handler so that every failure becomes a JSON error body.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const Json::exception& e) {
            send_error(res, ErrorCode::InvalidArgument, e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorCode::Internal, e.what());
        }
    };
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict: return 409;
        case ErrorCode::Io:
        case ErrorCode::Internal:
        case ErrorCode::Undefined: return 500;
        default: return 400;
    }
}

HttpServer::HttpServer(InstrumentService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                           {"Access-Control-Expose-Headers", "X-Doci-Seq, X-Doci-Channel, X-Doci-Kind, X-Doci-Mode, X-Doci-Timestamp"}});
    s.set_payload_max_length(16u << 20);
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/api/status", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, service_.status());
    }));

    s.Put("/api/config", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.update_config(body_json(req)));
    }));

    s.Post("/api/mode", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const Json body = body_json(req);
        check_keys(body, {"mode"}, "mode request");
        if (!body.contains("mode") || !body.at("mode").is_string()) {
            fail(ErrorCode::InvalidArgument, "mode request needs a string \"mode\"");
        }
        send_json(res, service_.set_mode(body.at("mode").get<std::string>()));
    }));

    s.Get("/api/frame", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const long long since = int_param(req, "since", 0);
        const long long timeout = int_param(req, "timeout_ms", kMaxPollMs);
        require(since >= 0, "since must be nonnegative");
        require(timeout >= 0 && timeout <= kMaxPollMs, "timeout_ms must be within [0, 30000]");
        const auto frame = service_.wait_frame(static_cast<std::uint64_t>(since), std::chrono::milliseconds(timeout));
        if (!frame) {
            res.status = 204;
            return;
        }
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
        if (format == "png") {
            res.set_header("X-Doci-Seq", std::to_string(frame->seq));
            res.set_header("X-Doci-Channel", std::to_string(frame->channel));
            res.set_header("X-Doci-Kind", frame->kind);
            res.set_header("X-Doci-Mode", frame->mode);
            res.set_header("X-Doci-Timestamp", frame->timestamp);
            res.set_content(std::string(frame->png.begin(), frame->png.end()), "image/png");
            return;
        }
        require(format == "json", "format must be json or png");
        send_json(res, {{"seq", frame->seq},
                        {"channel", frame->channel},
                        {"kind", frame->kind},
                        {"mode", frame->mode},
                        {"timestamp", frame->timestamp},
                        {"width", frame->width},
                        {"height", frame->height},
                        {"png_base64", base64(frame->png)}});
    }));

    s.Post("/api/classify", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto out = service_.classify(body_json(req));
        Json body = std::move(out.result);
        body["overlay_png_base64"] = base64(out.overlay_png);
        send_json(res, body);
    }));

    s.Get("/api/raster", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const long long channel = int_param(req, "channel", kFirstChannel);
        const std::string plane = req.has_param("plane") ? req.get_param_value("plane") : "doci";
        const auto bytes = service_.raster(static_cast<int>(channel), plane);
        res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
    }));

    s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) {
            send_error(res, ErrorCode::NotFound, "no such endpoint: " + req.method + " " + req.path);
        }
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = server_->bind_to_any_port(host);
        if (p < 0) fail(ErrorCode::Io, "cannot bind " + host);
        return p;
    }
    if (!server_->bind_to_port(host, port)) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::start() {
    thread_ = std::thread([this] { run(); });
    server_->wait_until_ready();
}

void HttpServer::stop() {
    service_.stop();
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace doci
