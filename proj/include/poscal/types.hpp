#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace poscal {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }
    double l1() const { return std::abs(x) + std::abs(y); }
};

/// Per-keypoint annotation falloff constants. The keypoint error envelope
/// is exp(-d^2 / (2 l^2)) with l = sqrt(falloff[k] * area).
struct KeypointSpec {
    int count = 0;
    std::vector<double> falloff;

    void validate() const;

    /// The 17-keypoint COCO convention, falloff[k] = (2 * sigma_k)^2 with the
    /// standard per-keypoint sigmas (nose, eyes, ears, shoulders, elbows,
    /// wrists, hips, knees, ankles).
    static KeypointSpec coco17();

    /// Uniform falloff for all keypoints (handy for synthetic setups).
    static KeypointSpec uniform(int k, double var);
};

struct GroundTruthInstance {
    std::int64_t id = 0;
    double area = 0.0;
    std::vector<Vec2> keypoints;
    std::vector<bool> visibility;

    int visible_count() const;
};

struct PredictedInstance {
    std::int64_t id = 0;
    std::vector<Vec2> keypoints;
    std::vector<double> kp_scores;      // in [0,1]
    std::vector<double> sigma;          // optional, empty when absent
    double instance_conf = 0.0;         // in [0,1]
    double area = -1.0;                 // optional predicted area, < 0 when absent

    bool has_sigma() const { return !sigma.empty(); }
    bool has_area() const { return area > 0.0; }
};

// CLI exit code classes. Library code throws the matching exception types.
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_parse = 2,
    exit_alignment = 3,
    exit_config = 4,
    exit_tolerance = 5,
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a metric is undefined for the given instance,
/// e.g. OKS of an instance with no visible keypoint.
struct NotEvaluableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace poscal
