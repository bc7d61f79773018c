#include "grl/geometry.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

#include "grl/format_parser.hpp"

namespace grl {

double signed_area(const Polygon& p) {
    const auto& v = p.vertices;
    if (v.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        twice += v[j].x * v[i].y - v[i].x * v[j].y;
    }
    return 0.5 * twice;
}

double area(const Polygon& p) { return std::abs(signed_area(p)); }

double normalize_angle(double angle_deg) {
    double a = std::fmod(angle_deg + 90.0, 180.0);
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a - 90.0;
}

RotatedBox clamp_to_grid(const RotatedBox& box) {
    RotatedBox out = box;
    out.cx = std::clamp(box.cx, 0.0, kGridSize);
    out.cy = std::clamp(box.cy, 0.0, kGridSize);
    out.w = std::min(box.w, kGridSize);
    out.h = std::min(box.h, kGridSize);
    out.angle_deg = normalize_angle(box.angle_deg);
    return out;
}

namespace {

std::string number_text(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

struct Literal {
    std::size_t begin = 0;
    std::size_t end = 0; // one past '}'
    std::optional<RotatedBox> box; // empty when the numbers do not form a valid box
};

class LiteralScanner {
public:
    explicit LiteralScanner(std::string_view s) : s_(s) {}

    std::optional<Literal> next() {
        while (pos_ < s_.size()) {
            const std::size_t brace = s_.find('{', pos_);
            if (brace == std::string_view::npos) break;
            if (auto lit = try_parse(brace)) {
                pos_ = lit->end;
                return lit;
            }
            pos_ = brace + 1;
        }
        pos_ = s_.size();
        return std::nullopt;
    }

private:
    void skip_ws(std::size_t& i) const {
        while (i < s_.size() && (s_[i] == ' ' || s_[i] == '\t' || s_[i] == '\n' || s_[i] == '\r')) ++i;
    }

    bool expect(std::size_t& i, char c) const {
        skip_ws(i);
        if (i < s_.size() && s_[i] == c) {
            ++i;
            return true;
        }
        return false;
    }

    // <number>; `value` is empty for text that is not a finite number.
    bool field(std::size_t& i, std::optional<double>& value) const {
        if (!expect(i, '<')) return false;
        const std::size_t close = s_.find('>', i);
        if (close == std::string_view::npos) return false;
        const std::string_view body = s_.substr(i, close - i);
        if (body.find('<') != std::string_view::npos) return false;
        i = close + 1;
        std::string_view t = trim(body);
        if (!t.empty() && t.front() == '+') t.remove_prefix(1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec == std::errc() && ptr == t.data() + t.size() && !t.empty() && std::isfinite(v)) {
            value = v;
        } else {
            value.reset();
        }
        return true;
    }

    std::optional<Literal> try_parse(std::size_t brace) const {
        std::size_t i = brace + 1;
        std::array<std::optional<double>, 5> v;
        for (int k = 0; k < 4; ++k) {
            if (!field(i, v[k])) return std::nullopt;
        }
        if (!expect(i, '|')) return std::nullopt;
        if (!field(i, v[4])) return std::nullopt;
        if (!expect(i, '}')) return std::nullopt;

        Literal lit{brace, i, std::nullopt};
        const bool all = std::all_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
        if (all && *v[2] > 0.0 && *v[3] > 0.0) {
            lit.box = clamp_to_grid(RotatedBox{*v[0], *v[1], *v[2], *v[3], *v[4]});
        }
        return lit;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

double cross(const Point2& a, const Point2& b, const Point2& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Polygon counter_clockwise(Polygon p) {
    if (signed_area(p) < 0.0) std::reverse(p.vertices.begin(), p.vertices.end());
    return p;
}

} // namespace

std::string format_box(const RotatedBox& box) {
    return "{<" + number_text(box.cx) + "><" + number_text(box.cy) + "><" + number_text(box.w) +
           "><" + number_text(box.h) + ">|<" + number_text(box.angle_deg) + ">}";
}

std::vector<RotatedBox> parse_boxes(std::string_view answer) {
    std::vector<RotatedBox> boxes;
    LiteralScanner scan(answer);
    while (auto lit = scan.next()) {
        if (lit->box) boxes.push_back(*lit->box);
    }
    return boxes;
}

std::string strip_box_literals(std::string_view answer) {
    std::string out;
    std::size_t last = 0;
    LiteralScanner scan(answer);
    while (auto lit = scan.next()) {
        out.append(answer.substr(last, lit->begin - last));
        out.push_back(' ');
        last = lit->end;
    }
    out.append(answer.substr(last));
    return out;
}

Polygon to_polygon(const RotatedBox& box) {
    const double rad = box.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double hw = 0.5 * box.w;
    const double hh = 0.5 * box.h;
    const std::array<Point2, 4> local = {{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
    Polygon p;
    p.vertices.reserve(4);
    for (const auto& q : local) {
        p.vertices.push_back({box.cx + c * q.x - s * q.y, box.cy + s * q.x + c * q.y});
    }
    return p;
}

double polygon_intersection_area(const Polygon& p, const Polygon& q) {
    if (p.vertices.size() < 3 || q.vertices.size() < 3) return 0.0;
    const Polygon clip = counter_clockwise(q);
    std::vector<Point2> out = counter_clockwise(p).vertices;
    std::vector<Point2> in;
    const auto& cv = clip.vertices;
    for (std::size_t e = 0; e < cv.size() && !out.empty(); ++e) {
        const Point2& a = cv[e];
        const Point2& b = cv[(e + 1) % cv.size()];
        in.swap(out);
        out.clear();
        Point2 prev = in.back();
        double d_prev = cross(a, b, prev);
        for (const Point2& cur : in) {
            const double d_cur = cross(a, b, cur);
            if (d_cur >= 0.0) {
                if (d_prev < 0.0) {
                    const double t = d_prev / (d_prev - d_cur);
                    out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
                }
                out.push_back(cur);
            } else if (d_prev >= 0.0) {
                const double t = d_prev / (d_prev - d_cur);
                out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
            }
            prev = cur;
            d_prev = d_cur;
        }
    }
    if (out.size() < 3) return 0.0;
    return area(Polygon{std::move(out)});
}

double iou(const RotatedBox& a, const RotatedBox& b) {
    const double area_a = a.area();
    const double area_b = b.area();
    if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
    if (a == b) return 1.0;
    const double inter = std::min(polygon_intersection_area(to_polygon(a), to_polygon(b)),
                                  std::min(area_a, area_b));
    const double uni = area_a + area_b - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

RotatedBox to_hbb(const RotatedBox& box) {
    if (box.angle_deg == 0.0) return box;
    const Polygon p = to_polygon(box);
    double min_x = p.vertices[0].x, max_x = min_x;
    double min_y = p.vertices[0].y, max_y = min_y;
    for (const auto& v : p.vertices) {
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
    }
    return RotatedBox{0.5 * (min_x + max_x), 0.5 * (min_y + max_y), max_x - min_x, max_y - min_y, 0.0};
}

RotatedBox zero_angle(const RotatedBox& box) {
    RotatedBox out = box;
    out.angle_deg = 0.0;
    return out;
}

RotatedBox horizontal(const RotatedBox& box, HbbConversion conv) {
    return conv == HbbConversion::ZeroAngle ? zero_angle(box) : to_hbb(box);
}

DetectionMatch detection_match(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt,
                               DetectionMode mode, HbbConversion conv) {
    if (gt.empty()) throw Error(ErrorCode::EmptyGroundTruth, "detection reward needs N >= 1 boxes");
    DetectionMatch m;
    if (pred.empty()) return m;

    std::vector<RotatedBox> p(pred.begin(), pred.end());
    std::vector<RotatedBox> g(gt.begin(), gt.end());
    if (mode == DetectionMode::HBB) {
        for (auto& b : p) b = horizontal(b, conv);
        for (auto& b : g) b = horizontal(b, conv);
    }
    std::vector<double> best_for_pred(p.size(), 0.0);
    double sum = 0.0;
    for (const auto& gb : g) {
        double best = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double v = iou(p[k], gb);
            best = std::max(best, v);
            best_for_pred[k] = std::max(best_for_pred[k], v);
        }
        sum += best;
    }
    m.reward = sum / static_cast<double>(g.size());
    double psum = 0.0;
    for (double v : best_for_pred) psum += v;
    m.precision = psum / static_cast<double>(p.size());
    return m;
}

double detection_reward(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt) {
    return detection_match(pred, gt, DetectionMode::RBB).reward;
}

double detection_reward_hbb(std::span<const RotatedBox> pred, std::span<const RotatedBox> gt,
                            HbbConversion conv) {
    return detection_match(pred, gt, DetectionMode::HBB, conv).reward;
}

} // namespace grl
