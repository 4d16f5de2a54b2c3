#include "cos3d/curation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cos3d::curation {

RotationViews RotationViews::fromRotation(const Rotation& r) {
    RotationViews v;
    const Eigen::Matrix3d& m = r.matrix();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v.matrix[i * 3 + j] = m(i, j);
    v.eulerUnit = r.eulerUnit();
    v.sinCosUnit = r.sinCosUnit();
    return v;
}

// ---------------------------------------------------------------------------
// Canonical line serialization. Field order is fixed and every floating
// number is written with exactly two decimals so output diffs are meaningful.
// ---------------------------------------------------------------------------

namespace {

void appendFixedArray(std::string& out, std::span<const double> values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fixed2(values[i]);
    }
    out += ']';
}

void appendIntArray(std::string& out, std::span<const int> values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    out += ']';
}

}  // namespace

std::string CanonicalLine::toJsonLine() const {
    std::string out = "{\"image_path\":\"" + jsonEscape(imagePath) + "\",\"category_name\":\"" +
                      jsonEscape(category) + "\"";
    out += ",\"image_width\":" + std::to_string(cam.width);
    out += ",\"image_height\":" + std::to_string(cam.height);
    out += ",\"K\":";
    const std::array<double, 9> k{cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1};
    appendFixedArray(out, k);
    out += ",\"instances\":[";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const InstanceRecord& r = instances[i];
        const RotationViews views =
            r.storedViews ? *r.storedViews : RotationViews::fromRotation(r.box3d.rot);
        if (i) out += ',';
        out += "{\"bbox_2d_px\":";
        appendFixedArray(out, r.box2d.pixel);
        out += ",\"bbox_2d_norm\":";
        appendIntArray(out, r.box2d.norm);
        out += ",\"center_cam\":";
        const std::array<double, 3> c{r.box3d.center.x(), r.box3d.center.y(), r.box3d.center.z()};
        appendFixedArray(out, c);
        out += ",\"dims_whl\":";
        const std::array<double, 3> d{r.box3d.dims.x(), r.box3d.dims.y(), r.box3d.dims.z()};
        appendFixedArray(out, d);
        out += ",\"rot_matrix\":";
        appendFixedArray(out, views.matrix);
        out += ",\"rot_euler_unit\":";
        appendFixedArray(out, views.eulerUnit);
        out += ",\"rot_sincos_unit\":";
        appendFixedArray(out, views.sinCosUnit);
        out += ",\"depth\":" + fixed2(r.depth);
        out += ",\"visibility\":" + fixed2(r.visibility.value_or(1.0));
        out += ",\"truncation\":" + fixed2(r.truncation.value_or(0.0));
        out += std::string(",\"estimated\":") + (r.estimated ? "true" : "false");
        out += '}';
    }
    out += "]}";
    return out;
}

CanonicalLine CanonicalLine::fromJsonLine(std::string_view line) {
    const json j = json::parse(line);
    CanonicalLine out;
    out.imagePath = j.at("image_path").get<std::string>();
    out.category = j.at("category_name").get<std::string>();
    out.cam.width = j.at("image_width").get<int>();
    out.cam.height = j.at("image_height").get<int>();
    const auto& k = j.at("K");
    out.cam.fx = k.at(0).get<double>();
    out.cam.cx = k.at(2).get<double>();
    out.cam.fy = k.at(4).get<double>();
    out.cam.cy = k.at(5).get<double>();
    out.cam.validate();

    for (const auto& ji : j.at("instances")) {
        InstanceRecord r;
        r.category = out.category;
        PixelRect px;
        NormRect nm;
        for (int i = 0; i < 4; ++i) {
            px[i] = ji.at("bbox_2d_px").at(i).get<double>();
            nm[i] = ji.at("bbox_2d_norm").at(i).get<int>();
        }
        r.box2d = Box2D::fromViews(px, nm);
        RotationViews views;
        for (int i = 0; i < 9; ++i) views.matrix[i] = ji.at("rot_matrix").at(i).get<double>();
        for (int i = 0; i < 3; ++i) views.eulerUnit[i] = ji.at("rot_euler_unit").at(i).get<double>();
        for (int i = 0; i < 6; ++i)
            views.sinCosUnit[i] = ji.at("rot_sincos_unit").at(i).get<double>();
        r.storedViews = views;
        r.box3d.center = Eigen::Vector3d(ji.at("center_cam").at(0).get<double>(),
                                         ji.at("center_cam").at(1).get<double>(),
                                         ji.at("center_cam").at(2).get<double>());
        r.box3d.dims = Eigen::Vector3d(ji.at("dims_whl").at(0).get<double>(),
                                       ji.at("dims_whl").at(1).get<double>(),
                                       ji.at("dims_whl").at(2).get<double>());
        // The euler view is the primary rotation parameterization downstream;
        // the stored matrix is kept verbatim for re-serialization.
        r.box3d.rot = Rotation::fromEulerZYX(angleFromUnit(views.eulerUnit[0]),
                                             angleFromUnit(views.eulerUnit[1]),
                                             angleFromUnit(views.eulerUnit[2]));
        r.depth = ji.at("depth").get<double>();
        r.visibility = ji.at("visibility").get<double>();
        r.truncation = ji.at("truncation").get<double>();
        r.estimated = ji.at("estimated").get<bool>();
        out.instances.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adapters.
// ---------------------------------------------------------------------------

namespace {

class SyntheticAdapter final : public Adapter {
  public:
    void ingest(const std::string& sourcePath, const std::function<void(RawImage&&)>& fn,
                const DiagnosticSink& diag) override {
        std::ifstream in(sourcePath);
        if (!in) {
            diag({"error", sourcePath, "cannot open source file"});
            return;
        }
        forEachLine(in, [&](std::string_view line, std::size_t n) {
            if (trim(line).empty()) return;
            try {
                fn(parseImage(line));
            } catch (const std::exception& e) {
                diag({"error", sourcePath + ":" + std::to_string(n),
                      std::string("corrupt record: ") + e.what()});
            }
        });
    }

  private:
    static RawImage parseImage(std::string_view line) {
        const json j = json::parse(line);
        RawImage img;
        img.imagePath = j.at("image_path").get<std::string>();
        img.cam.width = j.at("width").get<int>();
        img.cam.height = j.at("height").get<int>();
        const auto& k = j.at("intrinsics");
        img.cam.fx = k.at("fx").get<double>();
        img.cam.fy = k.at("fy").get<double>();
        img.cam.cx = k.at("cx").get<double>();
        img.cam.cy = k.at("cy").get<double>();
        img.cam.validate();
        std::size_t idx = 0;
        for (const auto& ji : j.at("instances")) {
            RawInstance inst;
            inst.category = ji.at("category").get<std::string>();
            inst.box3d.center = Eigen::Vector3d(ji.at("center").at(0).get<double>(),
                                                ji.at("center").at(1).get<double>(),
                                                ji.at("center").at(2).get<double>());
            inst.box3d.dims = Eigen::Vector3d(ji.at("dims").at(0).get<double>(),
                                              ji.at("dims").at(1).get<double>(),
                                              ji.at("dims").at(2).get<double>());
            if (ji.contains("euler_zyx")) {
                inst.box3d.rot = Rotation::fromEulerZYX(ji.at("euler_zyx").at(0).get<double>(),
                                                        ji.at("euler_zyx").at(1).get<double>(),
                                                        ji.at("euler_zyx").at(2).get<double>());
            } else if (ji.contains("yaw")) {
                inst.box3d.rot = Rotation::fromUpAxisAngle(ji.at("yaw").get<double>());
            }
            if (ji.contains("bbox2d")) {
                PixelRect px;
                for (int i = 0; i < 4; ++i) px[i] = ji.at("bbox2d").at(i).get<double>();
                inst.box2d = Box2D::fromPixel(px, img.cam);
            }
            if (ji.contains("visibility")) inst.visibility = ji.at("visibility").get<double>();
            if (ji.contains("truncation")) inst.truncation = ji.at("truncation").get<double>();
            inst.source.dataset = "synthetic";
            inst.source.instanceId = ji.contains("id")
                                         ? ji.at("id").get<std::string>()
                                         : img.imagePath + "#" + std::to_string(idx);
            img.instances.push_back(std::move(inst));
            ++idx;
        }
        return img;
    }
};

// Re-ingests canonical output. Consecutive lines that share an image path are
// regrouped into one image record; all serialized views travel verbatim.
class CanonicalAdapter final : public Adapter {
  public:
    void ingest(const std::string& sourcePath, const std::function<void(RawImage&&)>& fn,
                const DiagnosticSink& diag) override {
        std::ifstream in(sourcePath);
        if (!in) {
            diag({"error", sourcePath, "cannot open source file"});
            return;
        }
        std::optional<RawImage> current;
        forEachLine(in, [&](std::string_view line, std::size_t n) {
            if (trim(line).empty()) return;
            CanonicalLine cl;
            try {
                cl = CanonicalLine::fromJsonLine(line);
            } catch (const std::exception& e) {
                diag({"error", sourcePath + ":" + std::to_string(n),
                      std::string("corrupt record: ") + e.what()});
                return;
            }
            if (!current || current->imagePath != cl.imagePath) {
                if (current) fn(std::move(*current));
                current = RawImage{cl.imagePath, cl.cam, {}};
            }
            std::size_t idx = 0;
            for (InstanceRecord& r : cl.instances) {
                RawInstance inst;
                inst.category = r.category;
                inst.box3d = r.box3d;
                inst.box2d = r.box2d;
                inst.visibility = r.visibility;
                inst.truncation = r.truncation;
                inst.source.dataset = "canonical";
                inst.source.instanceId = cl.imagePath + "#" + cl.category + "#" + std::to_string(idx);
                inst.storedViews = r.storedViews;
                inst.storedDepth = r.depth;
                // estimated flag travels through the truncation/visibility
                // estimation bypass below
                inst.storedEstimated = r.estimated;
                current->instances.push_back(std::move(inst));
                ++idx;
            }
        });
        if (current) fn(std::move(*current));
    }
};

class KittiAdapter final : public Adapter {
  public:
    void ingest(const std::string& sourcePath, const std::function<void(RawImage&&)>& fn,
                const DiagnosticSink& diag) override {
        const fs::path root(sourcePath);
        const fs::path labelDir = root / "label_2";
        if (!fs::is_directory(labelDir)) {
            diag({"error", sourcePath, "expected a directory containing label_2/"});
            return;
        }
        std::vector<fs::path> labels;
        for (const auto& e : fs::directory_iterator(labelDir))
            if (e.path().extension() == ".txt") labels.push_back(e.path());
        std::sort(labels.begin(), labels.end());

        for (const fs::path& labelPath : labels) {
            const std::string stem = labelPath.stem().string();
            RawImage img;
            img.imagePath = (root / "image_2" / (stem + ".png")).string();
            try {
                img.cam = readCalib((root / "calib" / (stem + ".txt")).string());
            } catch (const std::exception& e) {
                diag({"error", labelPath.string(), e.what()});
                continue;
            }
            if (auto size = readPngSize(img.imagePath)) {
                img.cam.width = size->first;
                img.cam.height = size->second;
            } else {
                img.cam.width = 1242;  // common KITTI frame; header not readable
                img.cam.height = 375;
                diag({"warning", img.imagePath, "image unreadable; assuming 1242x375"});
            }
            img.cam.validate();

            std::ifstream in(labelPath);
            std::size_t idx = 0;
            forEachLine(in, [&](std::string_view line, std::size_t n) {
                if (trim(line).empty()) return;
                if (trim(line).rfind("DontCare", 0) == 0) return;  // unlabeled region marker
                try {
                    img.instances.push_back(
                        kittiLabelLineToInstance(line, stem + "#" + std::to_string(idx)));
                } catch (const std::exception& e) {
                    diag({"error", labelPath.string() + ":" + std::to_string(n),
                          std::string("corrupt label line: ") + e.what()});
                }
                ++idx;
            });
            fn(std::move(img));
        }
    }

  private:
    static CameraIntrinsics readCalib(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open calib file: " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("P2:", 0) != 0) continue;
            std::istringstream ss(line.substr(3));
            std::array<double, 12> p{};
            for (double& v : p)
                if (!(ss >> v)) throw std::runtime_error("malformed P2 row in " + path);
            CameraIntrinsics cam;
            cam.fx = p[0];
            cam.cx = p[2];
            cam.fy = p[5];
            cam.cy = p[6];
            cam.width = 1;  // patched by the caller
            cam.height = 1;
            return cam;
        }
        throw std::runtime_error("calib file lacks a P2 row: " + path);
    }
};

}  // namespace

std::unique_ptr<Adapter> makeAdapter(const std::string& name) {
    if (name == "synthetic") return std::make_unique<SyntheticAdapter>();
    if (name == "canonical") return std::make_unique<CanonicalAdapter>();
    if (name == "kitti") return std::make_unique<KittiAdapter>();
    std::string known;
    for (const auto& n : adapterNames()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown adapter '" + name + "' (known: " + known + ")");
}

std::vector<std::string> adapterNames() { return {"synthetic", "canonical", "kitti"}; }

RawInstance kittiLabelLineToInstance(std::string_view line, const std::string& instanceId) {
    std::istringstream ss{std::string(line)};
    std::string type;
    double truncated, occluded, alpha;
    double l, t, r, b;
    double h, w, len;
    double x, y, z, ry;
    if (!(ss >> type >> truncated >> occluded >> alpha >> l >> t >> r >> b >> h >> w >> len >>
          x >> y >> z >> ry))
        throw std::invalid_argument("label line needs 15 fields");

    RawInstance inst;
    // Lowercased type as the category; KITTI capitalizes class names.
    for (char c : type) inst.category += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    // Location is the bottom-face center in the camera frame (+Y down);
    // dimensions arrive as (h, w, l) and map to (W, H, L).
    inst.box3d.center = Eigen::Vector3d(x, y - h / 2.0, z);
    inst.box3d.dims = Eigen::Vector3d(w, h, len);
    inst.box3d.rot = Rotation::fromUpAxisAngle(ry);
    inst.truncation = truncated;
    // Occlusion level to a visibility fraction: 0 fully visible, 1 partly
    // occluded, 2 largely occluded; 3 (unknown) leaves it to estimation.
    switch (static_cast<int>(occluded)) {
        case 0: inst.visibility = 1.0; break;
        case 1: inst.visibility = 0.5; break;
        case 2: inst.visibility = 0.2; break;
        default: break;
    }
    inst.rawBox2dPixel = PixelRect{l, t, r, b};
    inst.source.dataset = "kitti";
    inst.source.instanceId = instanceId;
    return inst;
}

std::optional<std::pair<int, int>> readPngSize(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    unsigned char header[24];
    if (!in.read(reinterpret_cast<char*>(header), 24)) return std::nullopt;
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (int i = 0; i < 8; ++i)
        if (header[i] != sig[i]) return std::nullopt;
    auto be32 = [&](int off) {
        return (header[off] << 24) | (header[off + 1] << 16) | (header[off + 2] << 8) |
               header[off + 3];
    };
    return std::make_pair(be32(16), be32(20));
}

// ---------------------------------------------------------------------------
// Pipeline stages.
// ---------------------------------------------------------------------------

std::vector<InstanceRecord> prepareInstances(const RawImage& image, const CurationOptions& opts) {
    std::vector<InstanceRecord> out;
    out.reserve(image.instances.size());

    // Footprints for occlusion estimation use each instance's clipped hull.
    struct Prep {
        std::optional<Box2D> box2d;
        double depth;
        FrustumStatus status;
    };
    std::vector<Prep> preps(image.instances.size());
    for (std::size_t i = 0; i < image.instances.size(); ++i) {
        const RawInstance& raw = image.instances[i];
        Prep& p = preps[i];
        p.depth = raw.storedDepth ? *raw.storedDepth : depthOf(raw.box3d, opts.depthConvention);
        p.status = frustumStatus(raw.box3d, image.cam, opts.zNear);
        if (raw.box2d) {
            p.box2d = raw.box2d;
        } else if (raw.rawBox2dPixel) {
            p.box2d = Box2D::fromPixel(*raw.rawBox2dPixel, image.cam);
        } else if (p.status != FrustumStatus::BehindCamera) {
            p.box2d = projectBox(raw.box3d, image.cam, opts.zNear).box;
        }
    }

    for (std::size_t i = 0; i < image.instances.size(); ++i) {
        const RawInstance& raw = image.instances[i];
        InstanceRecord rec;
        rec.category = raw.category;
        rec.box3d = raw.box3d;
        rec.depth = preps[i].depth;
        rec.box2d = preps[i].box2d.value_or(Box2D{});
        rec.source = raw.source;
        rec.storedViews = raw.storedViews;
        rec.visibility = raw.visibility;
        rec.truncation = raw.truncation;

        if (raw.storedEstimated) {
            rec.estimated = *raw.storedEstimated;
        } else {
            if (!rec.truncation) {
                rec.truncation = preps[i].status == FrustumStatus::BehindCamera
                                     ? 1.0
                                     : truncationEstimate(raw.box3d, image.cam, opts.zNear);
                rec.estimated = true;
            }
            if (!rec.visibility) {
                if (preps[i].status == FrustumStatus::BehindCamera || !preps[i].box2d) {
                    rec.visibility = 0.0;
                } else {
                    std::vector<InstanceFootprint> occluders;
                    for (std::size_t j = 0; j < preps.size(); ++j) {
                        if (j == i || !preps[j].box2d) continue;
                        occluders.push_back({preps[j].box2d->pixel, preps[j].depth});
                    }
                    rec.visibility = visibilityEstimate({preps[i].box2d->pixel, preps[i].depth},
                                                        occluders);
                }
                rec.estimated = true;
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

const char* dropReasonName(DropReason r) {
    switch (r) {
        case DropReason::BehindCamera: return "behind_camera";
        case DropReason::FullyOutside: return "fully_outside";
        case DropReason::LowVisibility: return "low_visibility";
        case DropReason::HighTruncation: return "high_truncation";
    }
    return "?";
}

FilterResult filterInstances(std::vector<InstanceRecord> records, const CameraIntrinsics& cam,
                             const CurationOptions& opts) {
    FilterResult res;
    for (InstanceRecord& r : records) {
        const FrustumStatus status = frustumStatus(r.box3d, cam, opts.zNear);
        std::optional<DropReason> reason;
        if (status == FrustumStatus::BehindCamera) {
            reason = DropReason::BehindCamera;
        } else if (status == FrustumStatus::FullyOutside) {
            reason = DropReason::FullyOutside;
        } else if (!(r.visibility.value_or(1.0) > kMinVisibility)) {
            reason = DropReason::LowVisibility;
        } else if (!(r.truncation.value_or(0.0) < kMaxTruncation)) {
            reason = DropReason::HighTruncation;
        }
        if (reason)
            res.dropped.push_back({std::move(r), *reason});
        else
            res.kept.push_back(std::move(r));
    }
    return res;
}

std::vector<CanonicalLine> buildCanonicalLines(const RawImage& imageMeta,
                                               std::vector<InstanceRecord> kept) {
    std::map<std::string, std::vector<InstanceRecord>> byCategory;
    for (InstanceRecord& r : kept) byCategory[r.category].push_back(std::move(r));

    std::vector<CanonicalLine> lines;
    for (auto& [category, group] : byCategory) {
        std::stable_sort(group.begin(), group.end(),
                         [](const InstanceRecord& a, const InstanceRecord& b) {
                             return a.depth < b.depth;
                         });
        CanonicalLine line;
        line.imagePath = imageMeta.imagePath;
        line.category = category;
        line.cam = imageMeta.cam;
        line.instances = std::move(group);
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<CanonicalLine> normalizeImage(const RawImage& image, const CurationOptions& opts,
                                          std::vector<DropRecord>* droppedOut) {
    FilterResult filtered = filterInstances(prepareInstances(image, opts), image.cam, opts);
    if (droppedOut)
        for (DropRecord& d : filtered.dropped) droppedOut->push_back(std::move(d));
    return buildCanonicalLines(image, std::move(filtered.kept));
}

}  // namespace cos3d::curation
