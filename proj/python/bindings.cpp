#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cos3d/codec.hpp"
#include "cos3d/eval.hpp"
#include "cos3d/geometry.hpp"
#include "cos3d/iou3d.hpp"
#include "cos3d/packing.hpp"

namespace py = pybind11;
using namespace cos3d;

namespace {

Iou3dPath pathFromName(const std::string& name) {
    if (name == "auto") return Iou3dPath::Auto;
    if (name == "general") return Iou3dPath::General;
    if (name == "yaw_fast") return Iou3dPath::YawFast;
    throw std::invalid_argument("iou path must be auto|general|yaw_fast");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "camera-frame 3D box geometry, token codec, packing, and volumetric AP";

    // ---------------------------------------------------------------- geometry
    py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
                 CameraIntrinsics cam{fx, fy, cx, cy, width, height};
                 cam.validate();
                 return cam;
             }),
             py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"),
             py::arg("height"))
        .def_readwrite("fx", &CameraIntrinsics::fx)
        .def_readwrite("fy", &CameraIntrinsics::fy)
        .def_readwrite("cx", &CameraIntrinsics::cx)
        .def_readwrite("cy", &CameraIntrinsics::cy)
        .def_readwrite("width", &CameraIntrinsics::width)
        .def_readwrite("height", &CameraIntrinsics::height)
        .def("matrix_k", &CameraIntrinsics::matrixK)
        .def("principal_point_in_bounds", &CameraIntrinsics::principalPointInBounds);

    py::class_<Rotation>(m, "Rotation")
        .def(py::init<>())
        .def_static("identity", &Rotation::identity)
        .def_static("from_euler_zyx",
                    py::overload_cast<double, double, double>(&Rotation::fromEulerZYX),
                    py::arg("az"), py::arg("ay"), py::arg("ax"))
        .def_static("from_matrix", &Rotation::fromMatrix, py::arg("matrix"),
                    py::arg("tol") = 1e-6)
        .def_static("orthonormalized", &Rotation::orthonormalized, py::arg("matrix"))
        .def_static("from_up_axis_angle", &Rotation::fromUpAxisAngle, py::arg("angle"))
        .def_property_readonly("matrix", &Rotation::matrix)
        .def("euler_zyx", &Rotation::eulerZYX)
        .def("euler_unit", &Rotation::eulerUnit)
        .def("sincos_unit", &Rotation::sinCosUnit)
        .def("up_axis_angle", &Rotation::upAxisAngle)
        .def("is_up_axis_only", &Rotation::isUpAxisOnly, py::arg("tol") = 1e-9);

    py::class_<Box3D>(m, "Box3D")
        .def(py::init([](const Eigen::Vector3d& center, const Eigen::Vector3d& dims,
                         const Rotation& rot) {
                 return Box3D{center, dims, rot};
             }),
             py::arg("center"), py::arg("dims"), py::arg("rot") = Rotation())
        .def_readwrite("center", &Box3D::center)
        .def_readwrite("dims", &Box3D::dims)
        .def_readwrite("rot", &Box3D::rot)
        .def("volume", &Box3D::volume)
        .def("corners", [](const Box3D& b) {
            std::vector<Eigen::Vector3d> out;
            for (const auto& c : b.corners()) out.push_back(c);
            return out;
        });

    py::class_<Box2D>(m, "Box2D")
        .def_static("from_pixel", &Box2D::fromPixel, py::arg("pixel"), py::arg("cam"))
        .def_static("from_norm", &Box2D::fromNorm, py::arg("norm"), py::arg("cam"))
        .def_readonly("pixel", &Box2D::pixel)
        .def_readonly("norm", &Box2D::norm);

    py::enum_<FrustumStatus>(m, "FrustumStatus")
        .value("INSIDE", FrustumStatus::Inside)
        .value("PARTIALLY_OUTSIDE", FrustumStatus::PartiallyOutside)
        .value("FULLY_OUTSIDE", FrustumStatus::FullyOutside)
        .value("BEHIND_CAMERA", FrustumStatus::BehindCamera);

    py::class_<ProjectedBox>(m, "ProjectedBox")
        .def_readonly("box", &ProjectedBox::box)
        .def_readonly("unclipped", &ProjectedBox::unclipped);

    m.def("project_box", &projectBox, py::arg("box"), py::arg("cam"),
          py::arg("z_near") = kDefaultZNear);
    m.def("frustum_status", &frustumStatus, py::arg("box"), py::arg("cam"),
          py::arg("z_near") = kDefaultZNear);
    m.def("truncation_estimate", &truncationEstimate, py::arg("box"), py::arg("cam"),
          py::arg("z_near") = kDefaultZNear);
    m.def(
        "depth_of",
        [](const Box3D& b, const std::string& convention) {
            return depthOf(b, convention == "euclidean" ? DepthConvention::EuclideanNorm
                                                        : DepthConvention::CenterZ);
        },
        py::arg("box"), py::arg("convention") = "z");
    m.def(
        "visibility_estimate",
        [](const PixelRect& targetRect, double targetDepth,
           const std::vector<std::pair<PixelRect, double>>& occluders) {
            std::vector<InstanceFootprint> occ;
            for (const auto& [rect, depth] : occluders) occ.push_back({rect, depth});
            return visibilityEstimate({targetRect, targetDepth}, occ);
        },
        py::arg("target_rect"), py::arg("target_depth"), py::arg("occluders"));

    // ---------------------------------------------------------------- iou
    m.def(
        "iou3d",
        [](const Box3D& a, const Box3D& b, const std::string& path) {
            return iou3dExact(a, b, pathFromName(path));
        },
        py::arg("a"), py::arg("b"), py::arg("path") = "auto");
    m.def("iou3d_oracle", &iou3dOracle, py::arg("a"), py::arg("b"), py::arg("samples"),
          py::arg("seed"));
    m.def("iou2d", &iou2d, py::arg("a"), py::arg("b"));
    m.def("rect_iou", &rectIou, py::arg("a"), py::arg("b"));

    // ---------------------------------------------------------------- codec
    py::class_<codec::SerializationPolicy>(m, "SerializationPolicy")
        .def(py::init<>())
        .def_static("parse", &codec::SerializationPolicy::parse, py::arg("spec"))
        .def("to_string", &codec::SerializationPolicy::toString)
        .def("__repr__", [](const codec::SerializationPolicy& p) {
            return "SerializationPolicy('" + p.toString() + "')";
        });

    py::class_<codec::SceneInstance>(m, "SceneInstance")
        .def(py::init([](const Box3D& box3d, const Box2D& box2d, double depth) {
                 return codec::SceneInstance{box3d, box2d, depth};
             }),
             py::arg("box3d"), py::arg("box2d"), py::arg("depth"))
        .def_readwrite("box3d", &codec::SceneInstance::box3d)
        .def_readwrite("box2d", &codec::SceneInstance::box2d)
        .def_readwrite("depth", &codec::SceneInstance::depth);

    py::class_<codec::CosInstance>(m, "CosInstance")
        .def_readonly("box2d_norm", &codec::CosInstance::box2dNorm)
        .def_readonly("box2d_pixel", &codec::CosInstance::box2dPixel)
        .def_readonly("center", &codec::CosInstance::center)
        .def_readonly("dims", &codec::CosInstance::dims)
        .def_readonly("rotation", &codec::CosInstance::rotation)
        .def_readonly("rotation_raw", &codec::CosInstance::rotationRaw);

    py::class_<codec::ParseDiagnostic>(m, "ParseDiagnostic")
        .def_readonly("offset", &codec::ParseDiagnostic::offset)
        .def_readonly("expected", &codec::ParseDiagnostic::expected)
        .def_readonly("message", &codec::ParseDiagnostic::message);

    py::class_<codec::DecodeResult>(m, "DecodeResult")
        .def_property_readonly(
            "instances",
            [](const codec::DecodeResult& r) { return r.sequence.instances; })
        .def_property_readonly(
            "no_object",
            [](const codec::DecodeResult& r) {
                return r.sequence.terminal == codec::Terminal::NoObject;
            })
        .def_readonly("diagnostics", &codec::DecodeResult::diagnostics);

    py::register_exception<codec::CosParseError>(m, "CosParseError");

    m.def(
        "encode_scene",
        [](const std::vector<codec::SceneInstance>& instances,
           const codec::SerializationPolicy& policy, const CameraIntrinsics& cam) {
            return codec::encodeScene(instances, policy, cam);
        },
        py::arg("instances"), py::arg("policy"), py::arg("cam"));
    m.def(
        "decode_sequence",
        [](const std::string& text, const codec::SerializationPolicy& policy, bool strict,
           const CameraIntrinsics* cam) {
            return codec::decodeSequence(
                text, policy, strict ? codec::DecodeMode::Strict : codec::DecodeMode::Recover,
                cam);
        },
        py::arg("text"), py::arg("policy"), py::arg("strict") = true,
        py::arg("cam") = nullptr);
    m.def("quantize_2d", &codec::quantize2D, py::arg("pixel_box"), py::arg("cam"));
    m.def("dequantize_2d", &codec::dequantize2D, py::arg("norm_box"), py::arg("cam"));
    m.attr("NO_OBJECT_SENTINEL") = codec::kNoObjectSentinel;

    // ---------------------------------------------------------------- packing
    py::class_<packing::Tiling>(m, "Tiling")
        .def_readonly("cols", &packing::Tiling::cols)
        .def_readonly("rows", &packing::Tiling::rows)
        .def_readonly("thumbnail", &packing::Tiling::thumbnail)
        .def("tiles", &packing::Tiling::tiles)
        .def("__repr__", [](const packing::Tiling& t) {
            return "Tiling(cols=" + std::to_string(t.cols) + ", rows=" + std::to_string(t.rows) +
                   ", thumbnail=" + (t.thumbnail ? std::string("True") : std::string("False")) +
                   ")";
        });

    m.def("select_tiling", &packing::selectTiling, py::arg("width"), py::arg("height"),
          py::arg("tile_size") = packing::kDefaultTileSize,
          py::arg("min_tiles") = packing::kDefaultMinTiles,
          py::arg("max_tiles") = packing::kDefaultMaxTiles);
    m.def("estimate_text_tokens",
          [](const std::string& s) { return packing::estimateTextTokens(s); });

    py::class_<packing::PackMember>(m, "PackMember")
        .def_readonly("id", &packing::PackMember::id)
        .def_readonly("token_start", &packing::PackMember::tokenStart)
        .def_readonly("token_end", &packing::PackMember::tokenEnd);

    py::class_<packing::PackedSample>(m, "PackedSample")
        .def_readonly("members", &packing::PackedSample::members)
        .def_readonly("total_tokens", &packing::PackedSample::totalTokens)
        .def_readonly("oversized", &packing::PackedSample::oversized);

    m.def(
        "pack_stream",
        [](const std::vector<std::pair<std::string, long long>>& items, long long budget) {
            std::vector<packing::PackItem> packItems;
            for (const auto& [id, tokens] : items) packItems.push_back({id, tokens});
            return packing::packStream(packItems, budget);
        },
        py::arg("items"), py::arg("budget") = packing::kDefaultContextBudget);

    // ---------------------------------------------------------------- eval
    py::class_<eval::GtRecord>(m, "GtRecord")
        .def(py::init([](const std::string& dataset, const std::string& imageId,
                         const std::string& category, const std::vector<Box3D>& boxes) {
                 return eval::GtRecord{dataset, imageId, category, boxes};
             }),
             py::arg("dataset"), py::arg("image_id"), py::arg("category"), py::arg("boxes"));

    py::class_<eval::DetectionRecord>(m, "DetectionRecord")
        .def(py::init([](const std::string& dataset, const std::string& imageId,
                         const std::string& category, const std::vector<Box3D>& predictions) {
                 return eval::DetectionRecord{dataset, imageId, category, predictions};
             }),
             py::arg("dataset"), py::arg("image_id"), py::arg("category"),
             py::arg("predictions"));

    m.def(
        "match_greedy",
        [](const std::vector<Box3D>& preds, const std::vector<Box3D>& gts, double tau) {
            const auto out = eval::matchGreedy(preds, gts, tau);
            return py::make_tuple(out.isTp, out.unmatchedGt);
        },
        py::arg("predictions"), py::arg("gts"), py::arg("tau"));

    m.def(
        "ap_at_threshold",
        [](const std::vector<eval::DetectionRecord>& preds,
           const std::vector<eval::GtRecord>& gts, double tau, const std::string& confidence) {
            return eval::apAtThreshold(preds, gts, tau,
                                       confidence == "uniform" ? eval::Confidence::UniformScore
                                                               : eval::Confidence::EmissionOrder);
        },
        py::arg("predictions"), py::arg("gts"), py::arg("tau"),
        py::arg("confidence") = "emission");

    py::class_<eval::EvalReport>(m, "EvalReport")
        .def_readonly("mean_ap", &eval::EvalReport::meanAp)
        .def("to_json", &eval::EvalReport::toJson)
        .def("to_table", &eval::EvalReport::toTable);

    m.def(
        "ap_sweep",
        [](const std::vector<eval::DetectionRecord>& preds,
           const std::vector<eval::GtRecord>& gts, const std::vector<double>& thresholds,
           const std::string& confidence) {
            eval::EvalConfig cfg;
            if (!thresholds.empty()) cfg.thresholds = thresholds;
            cfg.confidence = confidence == "uniform" ? eval::Confidence::UniformScore
                                                     : eval::Confidence::EmissionOrder;
            return eval::apSweep(preds, gts, cfg);
        },
        py::arg("predictions"), py::arg("gts"),
        py::arg("thresholds") = std::vector<double>{}, py::arg("confidence") = "emission");

    py::class_<eval::GroundingReport>(m, "GroundingReport")
        .def_readonly("mean_ap", &eval::GroundingReport::meanAp)
        .def_readonly("accuracy_per_threshold", &eval::GroundingReport::accuracyPerThreshold)
        .def("to_json", &eval::GroundingReport::toJson);

    m.def(
        "grounding_score",
        [](const std::vector<std::tuple<std::string, std::vector<Box3D>, std::optional<Box3D>>>&
               queries,
           const std::vector<double>& thresholds) {
            std::vector<eval::GroundingQuery> qs;
            for (const auto& [id, gts, pred] : queries) qs.push_back({id, gts, pred});
            return eval::groundingScore(
                qs, thresholds.empty() ? eval::defaultGroundingThresholds() : thresholds);
        },
        py::arg("queries"), py::arg("thresholds") = std::vector<double>{});

    m.def("default_detection_thresholds", &eval::defaultDetectionThresholds);
    m.def("default_grounding_thresholds", &eval::defaultGroundingThresholds);
}
