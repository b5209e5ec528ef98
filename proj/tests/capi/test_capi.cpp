// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <doci/doci.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    doci_string_free(s);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("doci-capi-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    return p;
}

const char* kTissue = R"({"generator": "tissue", "width": 128, "height": 128})";

class Stack : public ::testing::Test {
protected:
    void SetUp() override { ASSERT_EQ(doci_acquire(kTissue, "{}", &stack), DOCI_OK) << doci_last_error(); }
    void TearDown() override { doci_stack_free(stack); }
    doci_stack* stack = nullptr;
};

}  // namespace

TEST(CApi, VersionAndStatusNames) {
    EXPECT_GT(std::strlen(doci_version()), 0u);
    EXPECT_STREQ(doci_status_name(DOCI_OK), "Ok");
    EXPECT_STREQ(doci_status_name(DOCI_E_CHECKSUM_MISMATCH), "ChecksumMismatch");
    EXPECT_STREQ(doci_status_name(DOCI_E_INTERNAL), "Internal");
}

TEST(CApi, ModelValueAndErrors) {
    double v = 0.0;
    ASSERT_EQ(doci_model_value(nullptr, 1.0, 2.0, 20.0, &v), DOCI_OK);
    EXPECT_NEAR(v, 0.149990920116921, 1e-9);
    EXPECT_EQ(doci_model_value("{}", 1.0, -2.0, 20.0, &v), DOCI_E_INVALID_ARGUMENT);
    EXPECT_NE(std::string(doci_last_error()).find("lifetime"), std::string::npos) << doci_last_error();
    EXPECT_EQ(doci_model_value("{}", 0.0, 2.0, 20.0, &v), DOCI_E_DENOMINATOR_TOO_SMALL);
    EXPECT_EQ(doci_model_value("{not json", 1.0, 2.0, 20.0, &v), DOCI_E_INVALID_ARGUMENT);
    EXPECT_EQ(doci_model_value(R"({"bogus": 1})", 1.0, 2.0, 20.0, &v), DOCI_E_INVALID_ARGUMENT);
    EXPECT_EQ(doci_model_value("{}", 1.0, 2.0, 20.0, nullptr), DOCI_E_INVALID_ARGUMENT);
}

TEST(CApi, Surface) {
    const double taus[] = {0.5, 1.0, 2.0};
    const double widths[] = {10.0, 20.0};
    double out[6];
    ASSERT_EQ(doci_model_surface(nullptr, taus, 3, widths, 2, out), DOCI_OK);
    EXPECT_LT(out[0], out[2]);
    EXPECT_GT(out[0], out[1]);
    char* csv = nullptr;
    ASSERT_EQ(doci_model_surface_csv(nullptr, taus, 3, widths, 2, &csv), DOCI_OK);
    const std::string s = take(csv);
    EXPECT_EQ(s.substr(0, s.find('\n')), "tau_ns,10,20");
}

TEST(CApi, MetricsRowAndHeader) {
    char* row = nullptr;
    char* js = nullptr;
    ASSERT_EQ(doci_metrics("[2 - 10]", 1269, 178, 2009, 235, &row, &js), DOCI_OK);
    EXPECT_EQ(take(row), "[2 - 10],1269,178,2009,235,91.86%,84.38%,88.81%,resubstitution");
    const json j = json::parse(take(js));
    EXPECT_EQ(j.at("accuracy_pct"), "88.81");
    EXPECT_STREQ(doci_metrics_csv_header(), "Channels,TN,FN,TP,FP,Sensitivity,Specificity,Accuracy,Mode");
    EXPECT_EQ(doci_metrics("[1]", 1, 1, 1, 1, &row, &js), DOCI_E_NOT_FOUND);
    EXPECT_EQ(doci_metrics("[2]", UINT64_MAX, 1, 1, 1, &row, &js), DOCI_E_INVALID_ARGUMENT);
    ASSERT_EQ(doci_metrics("[2]", 0, 0, 0, 0, &row, &js), DOCI_OK);
    EXPECT_EQ(take(row), "[2],0,0,0,0,NA,NA,NA,resubstitution");
    doci_string_free(js);
}

TEST(CApi, TemporalResolution) {
    double v = 0.0;
    char display[16];
    ASSERT_EQ(doci_temporal_resolution(0.0068, 21.03, &v, display), DOCI_OK);
    EXPECT_NEAR(v, 0.143, 5e-4);
    EXPECT_STREQ(display, "0.14");
    EXPECT_EQ(doci_temporal_resolution(-1.0, 21.03, &v, display), DOCI_E_INVALID_ARGUMENT);
}

TEST(CApi, OverlayColors) {
    std::uint8_t rgb[3];
    ASSERT_EQ(doci_overlay_color(DOCI_OVERLAY_FALSE_NEGATIVE, rgb), DOCI_OK);
    EXPECT_EQ((std::array<int, 3>{rgb[0], rgb[1], rgb[2]}), (std::array<int, 3>{0, 0, 255}));
    doci_overlay_color(DOCI_OVERLAY_FALSE_POSITIVE, rgb);
    EXPECT_EQ((std::array<int, 3>{rgb[0], rgb[1], rgb[2]}), (std::array<int, 3>{255, 0, 0}));
    doci_overlay_color(DOCI_OVERLAY_TRUE_POSITIVE, rgb);
    EXPECT_EQ((std::array<int, 3>{rgb[0], rgb[1], rgb[2]}), (std::array<int, 3>{128, 0, 128}));
    EXPECT_EQ(doci_overlay_color(static_cast<doci_overlay>(9), rgb), DOCI_E_INVALID_ARGUMENT);
}

TEST_F(Stack, InfoMapsAndArchives) {
    const json info = json::parse(take([&] {
        char* s = nullptr;
        EXPECT_EQ(doci_stack_info(stack, &s), DOCI_OK);
        return s;
    }()));
    EXPECT_EQ(info.at("width"), 128);
    EXPECT_EQ(info.at("channels").size(), 9u);
    EXPECT_TRUE(info.at("has_labels").get<bool>());
    EXPECT_FALSE(info.at("dark").get<bool>());

    doci_maps* maps = nullptr;
    ASSERT_EQ(doci_compute_maps(stack, 0.0, &maps), DOCI_OK);
    char* mi = nullptr;
    ASSERT_EQ(doci_maps_info(maps, &mi), DOCI_OK);
    EXPECT_EQ(json::parse(take(mi)).size(), 9u);

    const fs::path sdir = scratch("stack"), mdir = scratch("maps");
    ASSERT_EQ(doci_stack_save(stack, sdir.c_str(), "2026-01-01T00:00:00Z"), DOCI_OK);
    ASSERT_EQ(doci_maps_save(maps, mdir.c_str(), R"({"palette": "gray", "png": false})"), DOCI_OK);
    EXPECT_FALSE(fs::exists(mdir / "ch02_doci.png"));

    doci_stack* loaded = nullptr;
    ASSERT_EQ(doci_stack_load(sdir.c_str(), &loaded), DOCI_OK);
    doci_maps* lm = nullptr;
    ASSERT_EQ(doci_maps_load(mdir.c_str(), &lm), DOCI_OK);
    EXPECT_EQ(doci_maps_load(sdir.c_str(), &lm), DOCI_E_BAD_MAGIC);
    EXPECT_EQ(doci_stack_load((sdir / "missing").c_str(), &loaded), DOCI_E_IO);

    char* ri = nullptr;
    ASSERT_EQ(doci_raster_check((sdir / "ch05_decay.docr").c_str(), &ri), DOCI_OK);
    const json r = json::parse(take(ri));
    EXPECT_EQ(r.at("dtype"), "float32");
    EXPECT_EQ(r.at("bytes"), 16 + 128 * 128 * 4);
    { std::ofstream(sdir / "junk.docr") << "not a raster"; }
    EXPECT_EQ(doci_raster_check((sdir / "junk.docr").c_str(), &ri), DOCI_E_BAD_MAGIC);

    doci_maps_free(lm);
    doci_stack_free(loaded);
    doci_maps_free(maps);
    fs::remove_all(sdir);
    fs::remove_all(mdir);
}

TEST_F(Stack, ClassifyAndSweep) {
    char* out = nullptr;
    const fs::path dir = scratch("classify");
    ASSERT_EQ(doci_classify(stack, nullptr, R"({"channels": "[3 8 10]"})", dir.c_str(), &out), DOCI_OK)
        << doci_last_error();
    const json res = json::parse(take(out));
    EXPECT_EQ(res.at("channels"), "[3 8 10]");
    const json& m = res.at("metrics");
    EXPECT_EQ(m.at("tn").get<long>() + m.at("fn").get<long>() + m.at("tp").get<long>() + m.at("fp").get<long>(),
              res.at("blocks_evaluated").get<long>());
    EXPECT_TRUE(fs::exists(dir / "overlay.png"));
    EXPECT_TRUE(fs::exists(dir / "metrics.csv"));

    char* csv = nullptr;
    ASSERT_EQ(doci_sweep(stack, nullptr, R"({"sizes": [2]})", &csv), DOCI_OK);
    const std::string s = take(csv);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 37);
    EXPECT_EQ(doci_sweep(stack, nullptr, R"({"sizes": [2], "channels": [2]})", &csv), DOCI_E_INVALID_ARGUMENT);
    EXPECT_EQ(doci_classify(stack, nullptr, R"({"channels": [11]})", nullptr, &out), DOCI_E_NOT_FOUND);
    EXPECT_EQ(doci_classify(nullptr, nullptr, "{}", nullptr, &out), DOCI_E_INVALID_ARGUMENT);
    fs::remove_all(dir);
}

TEST(CApi, MissingLabelFileIsReported) {
    doci_stack* s = nullptr;
    ASSERT_EQ(doci_acquire(kTissue, "{}", &s), DOCI_OK);
    const fs::path dir = scratch("nolabels");
    ASSERT_EQ(doci_stack_save(s, dir.c_str(), nullptr), DOCI_OK);
    doci_stack_free(s);
    fs::remove(dir / "labels.docr");
    // Dropping the file without rewriting the manifest must be noticed.
    EXPECT_EQ(doci_stack_load(dir.c_str(), &s), DOCI_E_IO);
    fs::remove_all(dir);
}

TEST(CApi, ServiceLifecycle) {
    doci_service* svc = nullptr;
    ASSERT_EQ(doci_service_create(R"({"phantom": {"generator": "dye_drops", "width": 128, "height": 128,
                                                  "drop_radius_px": 30}})",
                                  &svc),
              DOCI_OK)
        << doci_last_error();
    int port = 0;
    ASSERT_EQ(doci_service_listen(svc, "127.0.0.1", 0, &port), DOCI_OK) << doci_last_error();
    EXPECT_GT(port, 0);
    char* st = nullptr;
    ASSERT_EQ(doci_service_status(svc, &st), DOCI_OK);
    EXPECT_EQ(json::parse(take(st)).at("mode"), "manual");
    EXPECT_EQ(doci_service_stop(svc), DOCI_OK);
    doci_service_free(svc);
    EXPECT_EQ(doci_service_create(R"({"bogus": 1})", &svc), DOCI_E_INVALID_ARGUMENT);
}

TEST(CApi, CalibrateAndResolve) {
    char* out = nullptr;
    ASSERT_EQ(doci_calibrate(R"({"target_inv_slope": 21.02})", nullptr, &out), DOCI_OK);
    const json c = json::parse(take(out));
    EXPECT_NEAR(c.at("fall_tau_fit").at("inv_slope").get<double>(), 21.02, 1e-3);
    ASSERT_EQ(doci_resolve(R"({"phantom": {"generator": "usaf"}})", nullptr, &out), DOCI_OK) << doci_last_error();
    const json r = json::parse(take(out));
    EXPECT_TRUE(r.contains("groups")) << r.dump();
}
