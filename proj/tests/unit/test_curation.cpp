#include "cos3d/curation.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/test_helpers.hpp"

using namespace cos3d;
using namespace cos3d::curation;
using testing::defaultCam;

namespace {

RawInstance makeRaw(const std::string& category, double z, double visibility, double truncation) {
    RawInstance r;
    r.category = category;
    r.box3d.center = Eigen::Vector3d(0, 0, z);
    r.box3d.dims = Eigen::Vector3d(1, 1, 1);
    r.visibility = visibility;
    r.truncation = truncation;
    r.source = {"test", category + std::to_string(z)};
    return r;
}

RawImage makeImage(std::vector<RawInstance> instances) {
    RawImage img;
    img.imagePath = "images/unit.png";
    img.cam = defaultCam();
    img.instances = std::move(instances);
    return img;
}

}  // namespace

TEST_SUITE_BEGIN("curation");

TEST_CASE("filter keeps only strict threshold survivors") {
    // visibility > 0.16 and truncation < 0.84, both strict
    const RawImage img = makeImage({
        makeRaw("car", 5, 0.15, 0.0),
        makeRaw("car", 6, 0.16, 0.0),
        makeRaw("car", 7, 0.17, 0.0),
        makeRaw("car", 8, 1.0, 0.83),
        makeRaw("car", 9, 1.0, 0.84),
        makeRaw("car", 10, 1.0, 0.85),
    });
    const FilterResult res = filterInstances(prepareInstances(img, {}), img.cam);
    REQUIRE(res.kept.size() == 2);
    CHECK(res.kept[0].visibility == 0.17);
    CHECK(res.kept[1].truncation == 0.83);
    REQUIRE(res.dropped.size() == 4);
    CHECK(res.dropped[0].reason == DropReason::LowVisibility);
    CHECK(res.dropped[1].reason == DropReason::LowVisibility);
    CHECK(res.dropped[2].reason == DropReason::HighTruncation);
    CHECK(res.dropped[3].reason == DropReason::HighTruncation);
}

TEST_CASE("behind-camera and fully-outside drops carry their reason") {
    RawInstance behind = makeRaw("car", -2, 1.0, 0.0);
    RawInstance outside = makeRaw("car", 5, 1.0, 0.0);
    outside.box3d.center = Eigen::Vector3d(50, 0, 5);
    const RawImage img = makeImage({behind, outside});
    const FilterResult res = filterInstances(prepareInstances(img, {}), img.cam);
    CHECK(res.kept.empty());
    REQUIRE(res.dropped.size() == 2);
    CHECK(res.dropped[0].reason == DropReason::BehindCamera);
    CHECK(res.dropped[1].reason == DropReason::FullyOutside);
}

TEST_CASE("estimation fills absent metadata and flags it") {
    RawInstance native = makeRaw("car", 5, 0.9, 0.1);
    RawInstance bare = makeRaw("car", 8, 0, 0);
    bare.visibility.reset();
    bare.truncation.reset();
    const RawImage img = makeImage({native, bare});
    const auto recs = prepareInstances(img, {});
    REQUIRE(recs.size() == 2);
    CHECK_FALSE(recs[0].estimated);
    CHECK(recs[0].visibility == 0.9);
    CHECK(recs[1].estimated);
    CHECK(recs[1].visibility.has_value());
    CHECK(recs[1].truncation.has_value());
    // The nearer same-ray box fully covers this one: estimated visibility 0.
    CHECK(*recs[1].visibility == doctest::Approx(0.0));
    CHECK(*recs[1].truncation == doctest::Approx(0.0));
}

TEST_CASE("canonical lines group by category and sort by depth") {
    const RawImage img = makeImage({
        makeRaw("car", 7.2, 1.0, 0.0),
        makeRaw("car", 3.1, 1.0, 0.0),
        makeRaw("pedestrian", 6.0, 1.0, 0.0),
        makeRaw("car", 5.0, 1.0, 0.0),
    });
    const auto lines = normalizeImage(img, {});
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].category == "car");  // sorted category order
    CHECK(lines[1].category == "pedestrian");
    REQUIRE(lines[0].instances.size() == 3);
    CHECK(lines[0].instances[0].depth == doctest::Approx(3.1));
    CHECK(lines[0].instances[1].depth == doctest::Approx(5.0));
    CHECK(lines[0].instances[2].depth == doctest::Approx(7.2));
}

TEST_CASE("equal depths preserve source order") {
    RawInstance a = makeRaw("car", 4.0, 1.0, 0.0);
    a.source.instanceId = "first";
    RawInstance b = makeRaw("car", 4.0, 1.0, 0.0);
    b.source.instanceId = "second";
    b.box3d.center.x() = 1;
    const auto lines = normalizeImage(makeImage({a, b}), {});
    REQUIRE(lines.size() == 1);
    REQUIRE(lines[0].instances.size() == 2);
    CHECK(lines[0].instances[0].source.instanceId == "first");
    CHECK(lines[0].instances[1].source.instanceId == "second");
}

TEST_CASE("canonical line serialization round trip") {
    Rng rng(12);
    RawImage img = makeImage({});
    for (int i = 0; i < 4; ++i) {
        RawInstance inst;
        inst.category = i % 2 ? "car" : "chair";
        inst.box3d = testing::randomBoxInFront(rng);
        inst.source = {"test", std::to_string(i)};
        img.instances.push_back(std::move(inst));
    }
    const auto lines = normalizeImage(img, {});
    for (const CanonicalLine& line : lines) {
        const std::string text = line.toJsonLine();
        const CanonicalLine back = CanonicalLine::fromJsonLine(text);
        CHECK(back.toJsonLine() == text);  // reprint is byte-stable
        CHECK(back.imagePath == line.imagePath);
        CHECK(back.category == line.category);
        CHECK(back.instances.size() == line.instances.size());
    }
}

TEST_CASE("kitti label line mapping") {
    // type trunc occ alpha bbox(l t r b) dims(h w l) loc(x y z) rotation_y
    const std::string line =
        "Car 0.10 1 -1.58 100.00 150.00 300.00 250.00 1.50 1.60 3.80 2.00 1.70 15.00 1.57";
    const RawInstance inst = kittiLabelLineToInstance(line, "000001#0");
    CHECK(inst.category == "car");
    CHECK(inst.box3d.dims.x() == doctest::Approx(1.6));   // W
    CHECK(inst.box3d.dims.y() == doctest::Approx(1.5));   // H
    CHECK(inst.box3d.dims.z() == doctest::Approx(3.8));   // L
    CHECK(inst.box3d.center.x() == doctest::Approx(2.0));
    CHECK(inst.box3d.center.y() == doctest::Approx(1.7 - 0.75));  // bottom -> center
    CHECK(inst.box3d.center.z() == doctest::Approx(15.0));
    CHECK(inst.box3d.rot.isUpAxisOnly());
    CHECK(inst.box3d.rot.upAxisAngle() == doctest::Approx(1.57));
    CHECK(inst.truncation == doctest::Approx(0.10));
    CHECK(inst.visibility == doctest::Approx(0.5));  // occlusion level 1
    REQUIRE(inst.rawBox2dPixel.has_value());
    CHECK((*inst.rawBox2dPixel)[0] == doctest::Approx(100.0));
    CHECK_THROWS_AS(kittiLabelLineToInstance("Car 0.0 0", "x"), std::invalid_argument);
}

TEST_CASE("synthetic adapter streams records and reports corrupt lines") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cos3d_curation_test";
    fs::create_directories(dir);
    const fs::path file = dir / "fixture.jsonl";
    {
        std::ofstream out(file);
        out << R"({"image_path":"a.png","width":100,"height":100,)"
            << R"("intrinsics":{"fx":100,"fy":100,"cx":50,"cy":50},)"
            << R"("instances":[{"category":"car","center":[0,0,5],"dims":[1,1,1]}]})" << "\n";
        out << "{ this is not json }\n";
        out << R"({"image_path":"b.png","width":100,"height":100,)"
            << R"("intrinsics":{"fx":100,"fy":100,"cx":50,"cy":50},"instances":[]})" << "\n";
    }
    auto adapter = makeAdapter("synthetic");
    std::vector<RawImage> images;
    std::vector<Diagnostic> diags;
    adapter->ingest(file.string(), [&](RawImage&& img) { images.push_back(std::move(img)); },
                    [&](const Diagnostic& d) { diags.push_back(d); });
    CHECK(images.size() == 2);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].where.find(":2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unknown adapter is rejected") {
    CHECK_THROWS_AS(makeAdapter("nuscenes-not-yet"), std::invalid_argument);
}

TEST_CASE("kitti adapter walks a label directory") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "cos3d_kitti_test";
    fs::remove_all(root);
    fs::create_directories(root / "label_2");
    fs::create_directories(root / "calib");
    std::ofstream(root / "label_2" / "000000.txt")
        << "Car 0.00 0 -1.58 100.00 150.00 300.00 250.00 1.50 1.60 3.80 2.00 1.70 15.00 1.57\n"
        << "DontCare -1 -1 -10 500.00 150.00 520.00 180.00 -1 -1 -1 -1000 -1000 -1000 -10\n";
    std::ofstream(root / "calib" / "000000.txt")
        << "P0: 7.0 0.0 6.0 0.0 0.0 7.0 1.7 0.0 0.0 0.0 1.0 0.0\n"
        << "P2: 721.54 0.0 609.56 44.85 0.0 721.54 172.85 0.21 0.0 0.0 1.0 0.003\n";

    auto adapter = makeAdapter("kitti");
    std::vector<RawImage> images;
    std::vector<Diagnostic> diags;
    adapter->ingest(root.string(), [&](RawImage&& img) { images.push_back(std::move(img)); },
                    [&](const Diagnostic& d) { diags.push_back(d); });
    REQUIRE(images.size() == 1);
    CHECK(images[0].cam.fx == doctest::Approx(721.54));
    CHECK(images[0].cam.cx == doctest::Approx(609.56));
    CHECK(images[0].cam.width == 1242);  // no image on disk, default frame assumed
    REQUIRE(images[0].instances.size() == 1);  // DontCare rows are skipped
    CHECK(images[0].instances[0].category == "car");
    // a missing-image warning was reported, the stream continued
    bool warned = false;
    for (const auto& d : diags) warned = warned || d.severity == "warning";
    CHECK(warned);
    fs::remove_all(root);
}

TEST_CASE("canonical re-ingestion is byte-stable") {
    Rng rng(77);
    RawImage img = makeImage({});
    img.imagePath = "images/idem.png";
    for (int i = 0; i < 5; ++i) {
        RawInstance inst;
        inst.category = i % 2 ? "car" : "chair";
        inst.box3d = testing::randomBoxInFront(rng);
        inst.visibility = 0.5 + 0.4 * rng.uniform01();
        inst.truncation = 0.3 * rng.uniform01();
        inst.source = {"test", std::to_string(i)};
        img.instances.push_back(std::move(inst));
    }
    std::string firstPass;
    for (const auto& line : normalizeImage(img, {})) firstPass += line.toJsonLine() + "\n";

    namespace fs = std::filesystem;
    const fs::path file = fs::temp_directory_path() / "cos3d_idem.jsonl";
    std::ofstream(file) << firstPass;

    auto adapter = makeAdapter("canonical");
    std::string secondPass;
    adapter->ingest(file.string(),
                    [&](RawImage&& reimg) {
                        for (const auto& line : normalizeImage(reimg, {}))
                            secondPass += line.toJsonLine() + "\n";
                    },
                    [](const Diagnostic&) {});
    CHECK(secondPass == firstPass);
    fs::remove(file);
}

TEST_SUITE_END();
