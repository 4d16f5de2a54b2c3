"""Camera-frame 3D box geometry, the interleaved 2D/3D token codec, context
packing, and volumetric 3D average precision."""

from cos3d._core import (  # noqa: F401
    NO_OBJECT_SENTINEL,
    Box2D,
    Box3D,
    CameraIntrinsics,
    CosInstance,
    CosParseError,
    DecodeResult,
    DetectionRecord,
    EvalReport,
    FrustumStatus,
    GroundingReport,
    GtRecord,
    PackedSample,
    PackMember,
    ParseDiagnostic,
    ProjectedBox,
    Rotation,
    SceneInstance,
    SerializationPolicy,
    Tiling,
    ap_at_threshold,
    ap_sweep,
    decode_sequence,
    default_detection_thresholds,
    default_grounding_thresholds,
    depth_of,
    dequantize_2d,
    encode_scene,
    estimate_text_tokens,
    frustum_status,
    grounding_score,
    iou2d,
    iou3d,
    iou3d_oracle,
    match_greedy,
    pack_stream,
    project_box,
    quantize_2d,
    rect_iou,
    select_tiling,
    truncation_estimate,
    visibility_estimate,
)

__version__ = "0.1.0"
