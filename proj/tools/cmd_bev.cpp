#include <algorithm>
#include <cmath>

#include "cli_common.hpp"
#include "cos3d/curation.hpp"
#include "json.hpp"

namespace cos3d::cli {

namespace {

using Pt = std::array<double, 2>;  // (X, Z) ground-plane coordinates

double cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Monotone-chain convex hull, ccw.
std::vector<Pt> convexHull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Pt> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Pt& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

std::vector<Pt> footprintHull(const Box3D& box) {
    std::vector<Pt> pts;
    for (const auto& c : box.corners()) {
        // Snap to a fine grid so the top/bottom corners of upright boxes
        // collapse to one footprint point.
        pts.push_back({std::round(c.x() * 1e6) / 1e6, std::round(c.z() * 1e6) / 1e6});
    }
    return convexHull(std::move(pts));
}

struct BevInstance {
    std::string category;
    double depth;
    std::vector<Pt> footprint;
};

// Near instances red, far instances blue (simple depth ramp).
std::string depthColor(double depth, double dMin, double dMax) {
    const double t = dMax > dMin ? std::clamp((depth - dMin) / (dMax - dMin), 0.0, 1.0) : 0.0;
    const int r = static_cast<int>(std::lround(220 * (1.0 - t) + 40 * t));
    const int b = static_cast<int>(std::lround(40 * (1.0 - t) + 220 * t));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x50%02x", r, b);
    return buf;
}

std::string renderSvg(const std::vector<BevInstance>& instances) {
    double xMin = -2, xMax = 2, zMin = 0, zMax = 2;
    for (const auto& inst : instances)
        for (const auto& p : inst.footprint) {
            xMin = std::min(xMin, p[0]);
            xMax = std::max(xMax, p[0]);
            zMin = std::min(zMin, p[1]);
            zMax = std::max(zMax, p[1]);
        }
    xMin = std::floor(xMin) - 1;
    xMax = std::ceil(xMax) + 1;
    zMin = std::floor(zMin) - 1;
    zMax = std::ceil(zMax) + 1;

    const double scale = 40.0;  // pixels per meter
    const double w = (xMax - xMin) * scale, h = (zMax - zMin) * scale;
    // Camera at the bottom, +Z up the page, +X to the right.
    auto sx = [&](double x) { return (x - xMin) * scale; };
    auto sy = [&](double z) { return h - (z - zMin) * scale; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                      std::to_string(static_cast<int>(w)) + "\" height=\"" +
                      std::to_string(static_cast<int>(h)) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // 1m x 1m grid
    for (double x = xMin; x <= xMax + 1e-9; x += 1.0)
        svg += "<line x1=\"" + std::to_string(sx(x)) + "\" y1=\"0\" x2=\"" + std::to_string(sx(x)) +
               "\" y2=\"" + std::to_string(h) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    for (double z = zMin; z <= zMax + 1e-9; z += 1.0)
        svg += "<line x1=\"0\" y1=\"" + std::to_string(sy(z)) + "\" x2=\"" + std::to_string(w) +
               "\" y2=\"" + std::to_string(sy(z)) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";

    double dMin = 1e18, dMax = -1e18;
    for (const auto& inst : instances) {
        dMin = std::min(dMin, inst.depth);
        dMax = std::max(dMax, inst.depth);
    }
    for (const auto& inst : instances) {
        svg += "<polygon points=\"";
        for (const auto& p : inst.footprint)
            svg += std::to_string(sx(p[0])) + "," + std::to_string(sy(p[1])) + " ";
        svg += "\" fill=\"" + depthColor(inst.depth, dMin, dMax) +
               "\" fill-opacity=\"0.45\" stroke=\"black\" stroke-width=\"1\"/>\n";
    }
    // camera marker
    svg += "<circle cx=\"" + std::to_string(sx(0)) + "\" cy=\"" + std::to_string(sy(0)) +
           "\" r=\"4\" fill=\"black\"/>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace

int cmdBev(CliContext& ctx, const std::string& input, const std::string& image,
           const std::string& output, const std::string& svgPath) {
    std::string targetImage = image;
    std::vector<BevInstance> instances;

    std::ifstream in = openInput(input);
    forEachLine(in, [&](std::string_view lineText, std::size_t n) {
        if (trim(lineText).empty()) return;
        try {
            const auto line = curation::CanonicalLine::fromJsonLine(lineText);
            if (targetImage.empty()) targetImage = line.imagePath;  // default: first image
            if (line.imagePath != targetImage) return;
            for (const auto& r : line.instances)
                instances.push_back({line.category, r.depth, footprintHull(r.box3d)});
        } catch (const std::exception& e) {
            ctx.report({"error", input + ":" + std::to_string(n),
                        std::string("corrupt canonical line: ") + e.what()});
        }
    });
    if (instances.empty())
        ctx.report({"warning", targetImage.empty() ? input : targetImage,
                    "no instances found for the requested scene"});

    std::ofstream out = openOutput(output);
    out << "{\"image\":\"" << jsonEscape(targetImage) << "\",\"grid_meters\":1.0,\"instances\":[";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (i) out << ',';
        out << "{\"category\":\"" << jsonEscape(instances[i].category)
            << "\",\"depth\":" << fixed2(instances[i].depth) << ",\"footprint\":[";
        for (std::size_t k = 0; k < instances[i].footprint.size(); ++k) {
            if (k) out << ',';
            out << '[' << fixed2(instances[i].footprint[k][0]) << ','
                << fixed2(instances[i].footprint[k][1]) << ']';
        }
        out << "]}";
    }
    out << "]}\n";

    if (!svgPath.empty()) {
        std::ofstream svg = openOutput(svgPath);
        svg << renderSvg(instances);
    }
    return ctx.finish();
}

}  // namespace cos3d::cli
