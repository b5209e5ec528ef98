#include <doci/doci.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Failure {
    doci_status status;
    std::string message;
};

void check(doci_status s) {
    if (s != DOCI_OK) throw Failure{s, doci_last_error()};
}

struct CString {
    char* p = nullptr;
    ~CString() { doci_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct StackPtr {
    doci_stack* p = nullptr;
    ~StackPtr() { doci_stack_free(p); }
};

struct MapsPtr {
    doci_maps* p = nullptr;
    ~MapsPtr() { doci_maps_free(p); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{DOCI_E_IO, "cannot read " + path};
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json load_json(const std::string& path) {
    if (path.empty()) return Json::object();
    try {
        return Json::parse(slurp(path));
    } catch (const Json::parse_error& e) {
        throw Failure{DOCI_E_INVALID_ARGUMENT, path + ": " + e.what()};
    }
}

// Default output location: $DOCI_DATA_DIR/<name>, or ./<name>.
std::string output_dir(const std::string& given, const std::string& name) {
    if (!given.empty()) return given;
    const char* root = std::getenv("DOCI_DATA_DIR");
    return (fs::path(root && *root ? root : ".") / name).string();
}

void warn(const std::string& message) { std::cerr << Json{{"warning", message}}.dump() << "\n"; }

void print(const std::string& json_text) { std::cout << Json::parse(json_text).dump(2) << "\n"; }

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Failure{DOCI_E_IO, "cannot write " + path};
}

void load_stack_and_maps(const std::string& stack_dir, const std::string& maps_dir, StackPtr& stack, MapsPtr& maps) {
    check(doci_stack_load(stack_dir.c_str(), &stack.p));
    if (!maps_dir.empty()) check(doci_maps_load(maps_dir.c_str(), &maps.p));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic optical contrast imaging simulator and toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(doci_version()));

    std::function<void()> action;

    // simulate
    std::string phantom_path, config_path, out, created_utc;
    auto* simulate = app.add_subcommand("simulate", "Simulate a gated acquisition and write a stack archive");
    simulate->add_option("--phantom", phantom_path, "Phantom spec (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--config", config_path, "Acquisition config (JSON)")->check(CLI::ExistingFile);
    simulate->add_option("--out", out, "Output stack directory");
    simulate->add_option("--created-utc", created_utc, "Timestamp recorded in the manifest");
    simulate->callback([&] {
        action = [&] {
            const std::string phantom = load_json(phantom_path).dump();
            const std::string config = load_json(config_path).dump();
            StackPtr stack;
            check(doci_acquire(phantom.c_str(), config.c_str(), &stack.p));
            const std::string dir = output_dir(out, "stack");
            check(doci_stack_save(stack.p, dir.c_str(), created_utc.empty() ? nullptr : created_utc.c_str()));
            CString info;
            check(doci_stack_info(stack.p, &info.p));
            Json j = Json::parse(info.str());
            j["out"] = dir;
            std::cout << j.dump(2) << "\n";
        };
    });

    // doci
    std::string stack_dir, maps_dir, palette = "hot";
    double floor = 0.0;
    std::vector<double> range;
    bool no_png = false;
    auto* doci_cmd = app.add_subcommand("doci", "Compute DOCI maps and heatmaps from a stack archive");
    doci_cmd->add_option("--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
    doci_cmd->add_option("--out", out, "Output maps directory");
    doci_cmd->add_option("--floor", floor, "Denominator floor; default is relative to the reference level");
    doci_cmd->add_option("--palette", palette, "Heatmap palette")->check(CLI::IsMember({"hot", "gray"}));
    doci_cmd->add_option("--range", range, "Fixed heatmap range LOW HIGH")->expected(2)->delimiter(',');
    doci_cmd->add_flag("--no-png", no_png, "Skip heatmap PNGs");
    doci_cmd->add_option("--created-utc", created_utc, "Timestamp recorded in the manifest");
    doci_cmd->callback([&] {
        action = [&] {
            StackPtr stack;
            check(doci_stack_load(stack_dir.c_str(), &stack.p));
            MapsPtr maps;
            check(doci_compute_maps(stack.p, floor, &maps.p));
            Json opts = {{"palette", palette}, {"png", !no_png}};
            if (!range.empty()) opts["range"] = range;
            if (!created_utc.empty()) opts["created_utc"] = created_utc;
            const std::string dir = output_dir(out, "maps");
            check(doci_maps_save(maps.p, dir.c_str(), opts.dump().c_str()));
            CString info;
            check(doci_maps_info(maps.p, &info.p));
            const Json channels = Json::parse(info.str());
            bool all_invalid = true;
            for (const auto& c : channels) all_invalid = all_invalid && c.at("valid_count").get<std::size_t>() == 0;
            if (all_invalid) warn("every pixel is invalid: the stack carries no signal above background");
            std::cout << Json{{"out", dir}, {"channels", channels}}.dump(2) << "\n";
        };
    });

    // classify
    std::string train_path, channels, mode;
    auto* classify = app.add_subcommand("classify", "Train a linear discriminant and predict cancer");
    classify->add_option("--stacks,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
    classify->add_option("--maps", maps_dir, "Precomputed maps directory")->check(CLI::ExistingDirectory);
    classify->add_option("--train", train_path, "Training request (JSON): rois, lambda, seed, ...")
        ->check(CLI::ExistingFile);
    classify->add_option("--channels", channels, "Channel subset, e.g. \"[6 8 10]\" or 2-10");
    classify->add_option("--mode", mode, "Evaluation mode")->check(CLI::IsMember({"resubstitution", "held-out"}));
    classify->add_option("--out", out, "Output directory");
    classify->callback([&] {
        action = [&] {
            StackPtr stack;
            MapsPtr maps;
            load_stack_and_maps(stack_dir, maps_dir, stack, maps);
            Json req = load_json(train_path);
            if (!channels.empty()) req["channels"] = channels;
            if (!mode.empty()) req["mode"] = mode;
            const std::string dir = output_dir(out, "classify");
            CString result;
            check(doci_classify(stack.p, maps.p, req.dump().c_str(), dir.c_str(), &result.p));
            Json j = Json::parse(result.str());
            j["out"] = dir;
            std::cout << j.dump(2) << "\n";
        };
    });

    // sweep
    std::vector<int> sizes{1, 2, 3, 9};
    auto* sweep = app.add_subcommand("sweep", "Evaluate every channel combination of the given sizes");
    sweep->add_option("--stacks,--stack", stack_dir, "Stack directory")->required()->check(CLI::ExistingDirectory);
    sweep->add_option("--maps", maps_dir, "Precomputed maps directory")->check(CLI::ExistingDirectory);
    sweep->add_option("--train", train_path, "Training request (JSON)")->check(CLI::ExistingFile);
    sweep->add_option("--sizes", sizes, "Subset sizes")->delimiter(',');
    sweep->add_option("--mode", mode, "Evaluation mode")->check(CLI::IsMember({"resubstitution", "held-out"}));
    sweep->add_option("--out", out, "Output CSV (\"-\" for stdout)");
    sweep->callback([&] {
        action = [&] {
            StackPtr stack;
            MapsPtr maps;
            load_stack_and_maps(stack_dir, maps_dir, stack, maps);
            Json req = load_json(train_path);
            req["sizes"] = sizes;
            if (!mode.empty()) req["mode"] = mode;
            CString csv;
            check(doci_sweep(stack.p, maps.p, req.dump().c_str(), &csv.p));
            const std::string path = out.empty() ? output_dir("", "sweep.csv") : out;
            write_text(path, csv.str());
            if (path != "-") {
                std::size_t rows = 0;
                for (char c : csv.str()) rows += c == '\n';
                std::cout << Json{{"out", path}, {"rows", rows - 1}}.dump(2) << "\n";
            }
        };
    });

    // calibrate
    std::string request_path;
    auto* calibrate = app.add_subcommand("calibrate", "Linearity fit, noise calibration and temporal resolution");
    calibrate->add_option("--request", request_path, "Calibration request (JSON)")->check(CLI::ExistingFile);
    calibrate->add_option("--out", out, "Output directory");
    calibrate->callback([&] {
        action = [&] {
            const std::string dir = output_dir(out, "calibration");
            CString result;
            check(doci_calibrate(load_json(request_path).dump().c_str(), dir.c_str(), &result.p));
            print(result.str());
        };
    });

    // resolve
    auto* resolve = app.add_subcommand("resolve", "Spatial resolution on a bar target");
    resolve->add_option("--request", request_path, "Resolution request (JSON)")->check(CLI::ExistingFile);
    resolve->add_option("--out", out, "Output directory");
    resolve->callback([&] {
        action = [&] {
            const std::string dir = output_dir(out, "resolution");
            CString result;
            check(doci_resolve(load_json(request_path).dump().c_str(), dir.c_str(), &result.p));
            print(result.str());
        };
    });

    // surface
    std::vector<double> taus, widths{10, 20, 30, 40};
    auto* surface = app.add_subcommand("surface", "DOCI value over lifetime and gate width, as CSV");
    surface->add_option("--pulse", request_path, "Pump pulse (JSON)")->check(CLI::ExistingFile);
    surface->add_option("--lifetimes", taus, "Lifetimes in ns")->delimiter(',');
    surface->add_option("--widths", widths, "Gate widths in ns")->delimiter(',');
    surface->add_option("--out", out, "Output CSV (\"-\" for stdout)");
    surface->callback([&] {
        action = [&] {
            if (taus.empty()) {
                for (int i = 1; i <= 60; ++i) taus.push_back(0.1 * i);
            }
            CString csv;
            check(doci_model_surface_csv(load_json(request_path).dump().c_str(), taus.data(), taus.size(),
                                         widths.data(), widths.size(), &csv.p));
            write_text(out.empty() ? "-" : out, csv.str());
        };
    });

    // serve
    std::string host = "127.0.0.1", data_dir;
    int port = 8080, interval_ms = 500, channel = 2;
    bool realtime = false;
    auto* serve = app.add_subcommand("serve", "Run the simulated instrument as an HTTP service");
    serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--phantom", phantom_path, "Phantom spec (JSON); default tissue phantom")
        ->check(CLI::ExistingFile);
    serve->add_option("--config", config_path, "Acquisition config (JSON)")->check(CLI::ExistingFile);
    serve->add_option("--data-dir", data_dir, "Where imaging archives are written");
    serve->add_option("--frame-interval-ms", interval_ms, "Video/Manual frame cadence")->check(CLI::PositiveNumber);
    serve->add_option("--channel", channel, "Initial Manual channel")->check(CLI::Range(2, 10));
    serve->add_flag("--realtime", realtime, "Pace imaging at 2 s per channel");
    serve->callback([&] {
        action = [&] {
            Json opts = {{"frame_interval_ms", interval_ms}, {"realtime", realtime}, {"channel", channel}};
            if (!phantom_path.empty()) opts["phantom"] = load_json(phantom_path);
            if (!config_path.empty()) opts["config"] = load_json(config_path);
            opts["data_dir"] = output_dir(data_dir, "acquisitions");

            sigset_t set;
            sigemptyset(&set);
            sigaddset(&set, SIGINT);
            sigaddset(&set, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);

            doci_service* svc = nullptr;
            check(doci_service_create(opts.dump().c_str(), &svc));
            std::unique_ptr<doci_service, void (*)(doci_service*)> owner(svc, doci_service_free);
            int bound = 0;
            check(doci_service_listen(svc, host.c_str(), port, &bound));
            std::cout << Json{{"listening", {{"host", host}, {"port", bound}}}}.dump() << std::endl;
            int sig = 0;
            sigwait(&set, &sig);
            check(doci_service_stop(svc));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << Json{{"code", "InvalidArgument"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        action();
    } catch (const Failure& f) {
        std::cerr << Json{{"code", doci_status_name(f.status)}, {"message", f.message}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << Json{{"code", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
