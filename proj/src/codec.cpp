#include "cos3d/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "cos3d/common.hpp"

namespace cos3d::codec {
namespace {

constexpr const char* kBox2dOpen = "<box2d>[";
constexpr const char* kBox2dClose = "]</box2d>";
constexpr const char* kBox3dOpen = "<box3d>[";
constexpr const char* kBox3dClose = "]</box3d>";

std::string renderBox2d(const NormRect& n) {
    std::string out = kBox2dOpen;
    for (int i = 0; i < 4; ++i) {
        if (i) out += ", ";
        out += std::to_string(n[i]);
    }
    out += kBox2dClose;
    return out;
}

std::string renderBox3d(const std::vector<double>& values) {
    std::string out = kBox3dOpen;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += fixed2(values[i]);
    }
    out += kBox3dClose;
    return out;
}

}  // namespace

std::string SerializationPolicy::toString() const {
    std::string out;
    switch (order) {
        case InterObjectOrder::NearToFar: out += "near_to_far"; break;
        case InterObjectOrder::LeftToRight: out += "left_to_right"; break;
        case InterObjectOrder::Random: out += "random:" + std::to_string(randomSeed); break;
    }
    out += factorization == Factorization::TwoDThenThreeD   ? ",2d3d"
           : factorization == Factorization::ThreeDThenTwoD ? ",3d2d"
                                                            : ",3d_only";
    out += intra3d == Intra3DOrder::CenterSizeRotation   ? ",csr"
           : intra3d == Intra3DOrder::CenterRotationSize ? ",crs"
                                                         : ",rsc";
    out += layout == Layout::Interleaved ? ",interleaved" : ",clustered";
    out += rotation == RotationFormat::EulerUnit    ? ",euler"
           : rotation == RotationFormat::SinCosUnit ? ",sincos"
                                                    : ",yaw";
    return out;
}

SerializationPolicy SerializationPolicy::parse(const std::string& spec) {
    SerializationPolicy p;
    for (const std::string& rawTok : splitOn(spec, ',')) {
        const std::string tok = trim(rawTok);
        if (tok.empty()) continue;
        if (tok == "near_to_far" || tok == "near") {
            p.order = InterObjectOrder::NearToFar;
        } else if (tok == "left_to_right" || tok == "ltr") {
            p.order = InterObjectOrder::LeftToRight;
        } else if (tok.rfind("random", 0) == 0) {
            p.order = InterObjectOrder::Random;
            const auto colon = tok.find(':');
            if (colon != std::string::npos) p.randomSeed = std::stoull(tok.substr(colon + 1));
        } else if (tok == "2d3d") {
            p.factorization = Factorization::TwoDThenThreeD;
        } else if (tok == "3d2d") {
            p.factorization = Factorization::ThreeDThenTwoD;
        } else if (tok == "3d_only" || tok == "3donly") {
            p.factorization = Factorization::ThreeDOnly;
        } else if (tok == "csr") {
            p.intra3d = Intra3DOrder::CenterSizeRotation;
        } else if (tok == "crs") {
            p.intra3d = Intra3DOrder::CenterRotationSize;
        } else if (tok == "rsc") {
            p.intra3d = Intra3DOrder::RotationSizeCenter;
        } else if (tok == "interleaved") {
            p.layout = Layout::Interleaved;
        } else if (tok == "clustered") {
            p.layout = Layout::Clustered;
        } else if (tok == "euler") {
            p.rotation = RotationFormat::EulerUnit;
        } else if (tok == "sincos") {
            p.rotation = RotationFormat::SinCosUnit;
        } else if (tok == "yaw") {
            p.rotation = RotationFormat::YawOnly;
        } else {
            throw std::invalid_argument("unknown policy token: " + tok);
        }
    }
    return p;
}

std::vector<double> box3dFieldValues(const Box3D& box, const SerializationPolicy& policy) {
    std::vector<double> center{box.center.x(), box.center.y(), box.center.z()};
    std::vector<double> size{box.dims.x(), box.dims.y(), box.dims.z()};
    std::vector<double> rot;
    switch (policy.rotation) {
        case RotationFormat::EulerUnit: {
            const auto e = box.rot.eulerUnit();
            rot.assign(e.begin(), e.end());
            break;
        }
        case RotationFormat::SinCosUnit: {
            const auto s = box.rot.sinCosUnit();
            rot.assign(s.begin(), s.end());
            break;
        }
        case RotationFormat::YawOnly:
            rot = {unitFromAngle(box.rot.upAxisAngle())};
            break;
    }
    std::vector<double> out;
    out.reserve(6 + rot.size());
    auto append = [&out](const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); };
    switch (policy.intra3d) {
        case Intra3DOrder::CenterSizeRotation: append(center); append(size); append(rot); break;
        case Intra3DOrder::CenterRotationSize: append(center); append(rot); append(size); break;
        case Intra3DOrder::RotationSizeCenter: append(rot); append(size); append(center); break;
    }
    return out;
}

std::vector<std::size_t> orderIndices(std::span<const SceneInstance> instances,
                                      const SerializationPolicy& policy) {
    std::vector<std::size_t> idx(instances.size());
    std::iota(idx.begin(), idx.end(), 0);
    switch (policy.order) {
        case InterObjectOrder::NearToFar:
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return instances[a].depth < instances[b].depth;
            });
            break;
        case InterObjectOrder::LeftToRight:
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                const auto& na = instances[a].box2d.norm;
                const auto& nb = instances[b].box2d.norm;
                if (na[0] != nb[0]) return na[0] < nb[0];
                if (na[1] != nb[1]) return na[1] < nb[1];
                return instances[a].depth < instances[b].depth;
            });
            break;
        case InterObjectOrder::Random: {
            Rng rng(policy.randomSeed);
            rng.shuffle(idx);
            break;
        }
    }
    return idx;
}

std::string encodeScene(std::span<const SceneInstance> instances,
                        const SerializationPolicy& policy, const CameraIntrinsics& cam) {
    (void)cam;  // geometry is already quantized; kept for interface symmetry
    if (instances.empty()) return kNoObjectSentinel;

    for (const auto& inst : instances) {
        if (!inst.box3d.center.allFinite() || !inst.box3d.dims.allFinite() ||
            !std::isfinite(inst.depth))
            throw std::invalid_argument("encodeScene: non-finite instance field");
    }

    const std::vector<std::size_t> order = orderIndices(instances, policy);

    std::vector<std::string> seg2d, seg3d;
    seg2d.reserve(order.size());
    seg3d.reserve(order.size());
    for (std::size_t i : order) {
        if (policy.factorization != Factorization::ThreeDOnly)
            seg2d.push_back(renderBox2d(instances[i].box2d.norm));
        seg3d.push_back(renderBox3d(box3dFieldValues(instances[i].box3d, policy)));
    }

    std::string out;
    auto joinInto = [&out](const std::vector<std::string>& parts) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (!out.empty() && i == 0) out += ", ";
            if (i) out += ", ";
            out += parts[i];
        }
    };

    if (policy.factorization == Factorization::ThreeDOnly) {
        joinInto(seg3d);
        return out;
    }
    if (policy.layout == Layout::Clustered) {
        const bool twoDFirst = policy.factorization == Factorization::TwoDThenThreeD;
        joinInto(twoDFirst ? seg2d : seg3d);
        joinInto(twoDFirst ? seg3d : seg2d);
        return out;
    }
    // Interleaved: the instance's two segments are adjacent, instances are
    // joined by ", ".
    for (std::size_t i = 0; i < seg3d.size(); ++i) {
        if (i) out += ", ";
        if (policy.factorization == Factorization::TwoDThenThreeD)
            out += seg2d[i] + seg3d[i];
        else
            out += seg3d[i] + seg2d[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing.
// ---------------------------------------------------------------------------
namespace {

enum class SegKind { Box2D, Box3D };

struct Segment {
    SegKind kind;
    std::vector<double> values;
    std::size_t offset;       // byte offset of the segment start
    bool intValues = true;    // all values were integer literals
};

struct Cursor {
    const std::string& text;
    std::size_t pos;
    std::size_t base;  // offset of the trimmed region in the original text
};

bool startsWith(const std::string& s, std::size_t pos, std::string_view lit) {
    return s.compare(pos, lit.size(), lit) == 0;
}

[[noreturn]] void fail(const Cursor& c, const std::string& expected, const std::string& msg) {
    throw CosParseError(c.base + c.pos, expected, msg);
}

// Strict-mode numeric literal: integer `\d+` or fixed two-decimal
// `-?\d+\.\d\d`.
double parseNumberStrict(Cursor& c, bool* wasInt) {
    const std::size_t start = c.pos;
    if (c.pos < c.text.size() && c.text[c.pos] == '-') ++c.pos;
    std::size_t digits = 0;
    while (c.pos < c.text.size() && std::isdigit(static_cast<unsigned char>(c.text[c.pos]))) {
        ++c.pos;
        ++digits;
    }
    if (digits == 0) fail(c, "number", "expected a numeric literal");
    bool isInt = true;
    if (c.pos < c.text.size() && c.text[c.pos] == '.') {
        ++c.pos;
        for (int k = 0; k < 2; ++k) {
            if (c.pos >= c.text.size() || !std::isdigit(static_cast<unsigned char>(c.text[c.pos])))
                fail(c, "two decimal digits", "fixed-point numbers carry exactly two decimals");
            ++c.pos;
        }
        if (c.pos < c.text.size() && std::isdigit(static_cast<unsigned char>(c.text[c.pos])))
            fail(c, "two decimal digits", "fixed-point numbers carry exactly two decimals");
        isInt = false;
    }
    if (wasInt) *wasInt = isInt;
    return std::strtod(c.text.c_str() + start, nullptr);
}

double parseNumberLenient(Cursor& c, bool* wasInt, bool* ok) {
    const char* begin = c.text.c_str() + c.pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) {
        *ok = false;
        return 0.0;
    }
    const std::string_view lit(begin, static_cast<std::size_t>(end - begin));
    *wasInt = lit.find('.') == std::string_view::npos &&
              lit.find('e') == std::string_view::npos &&
              lit.find('E') == std::string_view::npos;
    c.pos += static_cast<std::size_t>(end - begin);
    *ok = true;
    return v;
}

// Parses one tagged segment starting exactly at c.pos. Throws CosParseError
// (both modes); Recover-mode callers translate that into a skip.
Segment parseSegment(Cursor& c, DecodeMode mode) {
    Segment seg;
    seg.offset = c.base + c.pos;
    std::string closeTag;
    if (startsWith(c.text, c.pos, kBox2dOpen)) {
        seg.kind = SegKind::Box2D;
        c.pos += std::string_view(kBox2dOpen).size();
        closeTag = kBox2dClose;
    } else if (startsWith(c.text, c.pos, kBox3dOpen)) {
        seg.kind = SegKind::Box3D;
        c.pos += std::string_view(kBox3dOpen).size();
        closeTag = kBox3dClose;
    } else {
        fail(c, "<box2d> or <box3d>", "expected a tagged segment");
    }

    bool first = true;
    while (true) {
        if (!first) {
            if (mode == DecodeMode::Strict) {
                if (startsWith(c.text, c.pos, ", ")) {
                    c.pos += 2;
                } else if (startsWith(c.text, c.pos, closeTag)) {
                    break;
                } else {
                    fail(c, "\", \" or \"" + closeTag + "\"", "malformed value list");
                }
            } else {
                while (c.pos < c.text.size() &&
                       (c.text[c.pos] == ',' || std::isspace(static_cast<unsigned char>(c.text[c.pos]))))
                    ++c.pos;
                if (startsWith(c.text, c.pos, closeTag)) break;
            }
        } else if (startsWith(c.text, c.pos, closeTag)) {
            break;  // empty list; arity check rejects it below
        }
        bool wasInt = true;
        if (mode == DecodeMode::Strict) {
            seg.values.push_back(parseNumberStrict(c, &wasInt));
        } else {
            bool ok = true;
            const double v = parseNumberLenient(c, &wasInt, &ok);
            if (!ok) fail(c, "number", "expected a numeric literal");
            seg.values.push_back(v);
        }
        seg.intValues = seg.intValues && wasInt;
        first = false;
    }
    c.pos += closeTag.size();
    return seg;
}

void checkSegmentSemantics(const Segment& seg, const SerializationPolicy& policy) {
    if (seg.kind == SegKind::Box2D) {
        if (seg.values.size() != 4)
            throw CosParseError(seg.offset, "4 integers",
                                "box2d arity " + std::to_string(seg.values.size()) +
                                    ", expected 4");
        if (!seg.intValues)
            throw CosParseError(seg.offset, "integers", "box2d values must be integers");
        for (double v : seg.values)
            if (v < 0 || v > 1000)
                throw CosParseError(seg.offset, "value in [0,1000]",
                                    "box2d value out of range: " + fixed2(v));
        if (seg.values[0] > seg.values[2] || seg.values[1] > seg.values[3])
            throw CosParseError(seg.offset, "min <= max", "box2d min exceeds max");
    } else {
        const std::size_t want = static_cast<std::size_t>(policy.box3dArity());
        if (seg.values.size() != want)
            throw CosParseError(seg.offset, std::to_string(want) + " numbers",
                                "box3d arity " + std::to_string(seg.values.size()) +
                                    ", expected " + std::to_string(want));
    }
}

CosInstance buildInstance(const Segment* seg2d, const Segment& seg3d,
                          const SerializationPolicy& policy, const CameraIntrinsics* cam) {
    CosInstance inst;
    if (seg2d) {
        NormRect n;
        for (int i = 0; i < 4; ++i) n[i] = static_cast<int>(std::llround(seg2d->values[i]));
        inst.box2dNorm = n;
        if (cam) inst.box2dPixel = dequantizeRect(n, *cam);
    }

    const int rotArity = policy.rotationArity();
    std::span<const double> v(seg3d.values);
    std::span<const double> center, size, rot;
    switch (policy.intra3d) {
        case Intra3DOrder::CenterSizeRotation:
            center = v.subspan(0, 3); size = v.subspan(3, 3); rot = v.subspan(6, rotArity);
            break;
        case Intra3DOrder::CenterRotationSize:
            center = v.subspan(0, 3); rot = v.subspan(3, rotArity); size = v.subspan(3 + rotArity, 3);
            break;
        case Intra3DOrder::RotationSizeCenter:
            rot = v.subspan(0, rotArity); size = v.subspan(rotArity, 3); center = v.subspan(rotArity + 3, 3);
            break;
    }
    inst.center = Eigen::Vector3d(center[0], center[1], center[2]);
    inst.dims = Eigen::Vector3d(size[0], size[1], size[2]);
    inst.rotationRaw.assign(rot.begin(), rot.end());
    switch (policy.rotation) {
        case RotationFormat::EulerUnit:
            inst.rotation = Rotation::fromEulerZYX(angleFromUnit(rot[0]), angleFromUnit(rot[1]),
                                                   angleFromUnit(rot[2]));
            break;
        case RotationFormat::SinCosUnit:
            inst.rotation = Rotation::fromEulerZYX(angleFromSinCosUnit(rot[0], rot[3]),
                                                   angleFromSinCosUnit(rot[1], rot[4]),
                                                   angleFromSinCosUnit(rot[2], rot[5]));
            break;
        case RotationFormat::YawOnly:
            inst.rotation = Rotation::fromUpAxisAngle(angleFromUnit(rot[0]));
            break;
    }
    return inst;
}

void checkInstanceSemantics(const CosInstance& inst, std::size_t offset) {
    for (int i = 0; i < 3; ++i)
        if (inst.dims[i] < 0)
            throw CosParseError(offset, "non-negative dims", "negative box dimension");
    for (double r : inst.rotationRaw)
        if (r < 0.0 || r > 1.0)
            throw CosParseError(offset, "rotation value in [0,1]",
                                "rotation unit value out of range");
}

}  // namespace

NormRect quantize2D(const PixelRect& pixelBox, const CameraIntrinsics& cam) {
    return quantizeRect(pixelBox, cam);
}

PixelRect dequantize2D(const NormRect& normBox, const CameraIntrinsics& cam) {
    return dequantizeRect(normBox, cam);
}

DecodeResult decodeSequence(const std::string& text, const SerializationPolicy& policy,
                            DecodeMode mode, const CameraIntrinsics* cam) {
    DecodeResult result;

    // Outer whitespace is insignificant in both modes.
    std::size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    const std::string body = text.substr(begin, end - begin);

    if (body == kNoObjectSentinel) {
        result.sequence.terminal = Terminal::NoObject;
        return result;
    }
    if (body.empty()) {
        if (mode == DecodeMode::Strict)
            throw CosParseError(begin, "<box2d>, <box3d> or <no_object/>", "empty sequence");
        result.diagnostics.push_back({begin, "<no_object/> or instance segments", "empty sequence"});
        return result;
    }

    Cursor c{body, 0, begin};

    // Pass 1: collect tagged segments.
    std::vector<Segment> segments;
    while (c.pos < body.size()) {
        if (mode == DecodeMode::Strict) {
            if (!segments.empty()) {
                const bool interPair = policy.layout == Layout::Interleaved &&
                                       policy.factorization != Factorization::ThreeDOnly &&
                                       segments.size() % 2 == 1;
                if (!interPair) {
                    if (!startsWith(body, c.pos, ", "))
                        fail(c, "\", \" between instances", "missing separator");
                    c.pos += 2;
                }
            }
            Segment seg = parseSegment(c, mode);
            checkSegmentSemantics(seg, policy);
            segments.push_back(std::move(seg));
        } else {
            const std::size_t next2d = body.find("<box2d>", c.pos);
            const std::size_t next3d = body.find("<box3d>", c.pos);
            const std::size_t next = std::min(next2d, next3d);
            if (next == std::string::npos) break;
            c.pos = next;
            const std::size_t tagStart = c.pos;
            try {
                Segment seg = parseSegment(c, mode);
                checkSegmentSemantics(seg, policy);
                segments.push_back(std::move(seg));
            } catch (const CosParseError& e) {
                result.diagnostics.push_back({e.offset(), e.expected(), e.what()});
                c.pos = tagStart + 1;  // re-sync after the offending tag
            }
        }
    }

    // Pass 2: pair segments into instances according to the policy.
    auto emit = [&](const Segment* s2, const Segment& s3) {
        CosInstance inst = buildInstance(s2, s3, policy, cam);
        if (mode == DecodeMode::Strict) {
            checkInstanceSemantics(inst, s3.offset);
            result.sequence.instances.push_back(std::move(inst));
        } else {
            try {
                checkInstanceSemantics(inst, s3.offset);
                result.sequence.instances.push_back(std::move(inst));
            } catch (const CosParseError& e) {
                result.diagnostics.push_back({e.offset(), e.expected(), e.what()});
            }
        }
    };

    if (policy.factorization == Factorization::ThreeDOnly) {
        for (const Segment& s : segments) {
            if (s.kind != SegKind::Box3D) {
                if (mode == DecodeMode::Strict)
                    throw CosParseError(s.offset, "<box3d>", "unexpected <box2d> segment");
                result.diagnostics.push_back({s.offset, "<box3d>", "unexpected <box2d> segment"});
                continue;
            }
            emit(nullptr, s);
        }
    } else if (policy.layout == Layout::Interleaved) {
        const SegKind firstKind = policy.factorization == Factorization::TwoDThenThreeD
                                      ? SegKind::Box2D
                                      : SegKind::Box3D;
        std::size_t i = 0;
        while (i < segments.size()) {
            const bool pairOk = segments[i].kind == firstKind && i + 1 < segments.size() &&
                                segments[i + 1].kind != firstKind;
            if (!pairOk) {
                const std::string expected = segments[i].kind == firstKind
                                                 ? "matching second segment"
                                                 : "instance starting with the first segment kind";
                if (mode == DecodeMode::Strict)
                    throw CosParseError(segments[i].offset, expected, "unpaired segment");
                result.diagnostics.push_back({segments[i].offset, expected, "unpaired segment"});
                ++i;
                continue;
            }
            const Segment& s2 = segments[i].kind == SegKind::Box2D ? segments[i] : segments[i + 1];
            const Segment& s3 = segments[i].kind == SegKind::Box3D ? segments[i] : segments[i + 1];
            emit(&s2, s3);
            i += 2;
        }
    } else {
        // Clustered: a run of the first kind followed by a run of the second,
        // paired up by index.
        const SegKind firstKind = policy.factorization == Factorization::TwoDThenThreeD
                                      ? SegKind::Box2D
                                      : SegKind::Box3D;
        std::vector<const Segment*> first, second;
        bool seenSecond = false;
        for (const Segment& s : segments) {
            if (s.kind == firstKind) {
                if (seenSecond) {
                    if (mode == DecodeMode::Strict)
                        throw CosParseError(s.offset, "segments of the second run",
                                            "first-run segment after the second run started");
                    result.diagnostics.push_back(
                        {s.offset, "segments of the second run", "out-of-order segment"});
                    continue;
                }
                first.push_back(&s);
            } else {
                seenSecond = true;
                second.push_back(&s);
            }
        }
        if (mode == DecodeMode::Strict && first.size() != second.size())
            throw CosParseError(second.empty() ? (first.empty() ? begin : first.back()->offset)
                                               : second.back()->offset,
                                "equal segment counts",
                                "clustered runs differ: " + std::to_string(first.size()) + " vs " +
                                    std::to_string(second.size()));
        const std::size_t n = std::min(first.size(), second.size());
        for (std::size_t k = n; k < first.size(); ++k)
            result.diagnostics.push_back({first[k]->offset, "paired segment", "unpaired segment"});
        for (std::size_t k = n; k < second.size(); ++k)
            result.diagnostics.push_back({second[k]->offset, "paired segment", "unpaired segment"});
        for (std::size_t k = 0; k < n; ++k) {
            const Segment* s2 = firstKind == SegKind::Box2D ? first[k] : second[k];
            const Segment* s3 = firstKind == SegKind::Box3D ? first[k] : second[k];
            emit(s2, *s3);
        }
    }

    if (result.sequence.instances.empty() && mode == DecodeMode::Strict)
        throw CosParseError(begin, "at least one instance or <no_object/>",
                            "sequence decoded to zero instances");
    return result;
}

}  // namespace cos3d::codec
