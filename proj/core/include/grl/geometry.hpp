#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grl/types.hpp"

namespace grl {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Polygon {
    std::vector<Point2> vertices;
};

/// Shoelace signed area; positive for counter-clockwise vertex order.
double signed_area(const Polygon& p);
double area(const Polygon& p);

/// Wraps an angle in degrees to [-90, 90). A box rotated by 180 degrees is
/// the same box.
double normalize_angle(double angle_deg);

/// Clamps center and extents onto the [0, 448] grid and wraps the angle.
RotatedBox clamp_to_grid(const RotatedBox& box);

/// Serializes a box as {<cx><cy><w><h>|<angle>}.
std::string format_box(const RotatedBox& box);

/// Every {<cx><cy><w><h>|<angle>} literal in `answer`, in order, clamped to
/// the grid. Fragments with unparseable numbers or non-positive extents are
/// skipped.
std::vector<RotatedBox> parse_boxes(std::string_view answer);

/// `answer` with every box literal replaced by a single space.
std::string strip_box_literals(std::string_view answer);

/// Corners of the box, counter-clockwise.
Polygon to_polygon(const RotatedBox& box);

/// Area of p clipped against the convex polygon q (Sutherland-Hodgman).
/// Clips with fewer than three vertices have zero area.
double polygon_intersection_area(const Polygon& p, const Polygon& q);

double iou(const RotatedBox& a, const RotatedBox& b);

/// Axis-aligned bounding box of the rotated corners, angle zero.
RotatedBox to_hbb(const RotatedBox& box);

/// Same center and extents with the angle set to zero.
RotatedBox zero_angle(const RotatedBox& box);

enum class DetectionMode { RBB, HBB };

/// How boxes become horizontal in HBB mode. ZeroAngle drops the angle, so
/// two boxes that differ only in angle coincide; Enclosing uses to_hbb().
enum class HbbConversion { ZeroAngle, Enclosing };

RotatedBox horizontal(const RotatedBox& box, HbbConversion conv);

struct DetectionMatch {
    /// Mean over ground-truth boxes of the best IoU against any prediction.
    double reward = 0.0;
    /// Mean over predictions of the best IoU against any ground truth.
    /// Diagnostic only; unmatched predictions do not lower `reward`.
    double precision = 0.0;
};

DetectionMatch detection_match(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt,
                               DetectionMode mode = DetectionMode::RBB,
                               HbbConversion conv = HbbConversion::ZeroAngle);

/// (1/N) sum_n max_m IoU(pred_m, gt_n). Throws EmptyGroundTruth when gt is empty.
double detection_reward(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt);

/// detection_reward after mapping both sides to horizontal boxes.
double detection_reward_hbb(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt,
                            HbbConversion conv = HbbConversion::ZeroAngle);

} // namespace grl
