#pragma once

#include "clothfit/garments.hpp"
#include "clothfit/geometry.hpp"
#include "clothfit/rewards.hpp"
#include "clothfit/simulator.hpp"

#include <memory>
#include <vector>

namespace clothfit {

inline constexpr int kObsSize = 128;
inline constexpr int kNumRotations = 16;
inline constexpr std::array<double, 6> kScales{0.75, 1.0, 1.5, 2.0, 2.5, 3.0};
inline constexpr int kStackSize = kNumRotations * static_cast<int>(kScales.size()); // 96
inline constexpr int kGraspPixelOffset = 10; // grasp pixels at (x, y +/- 10)

// Top-down orthographic view: pixel (x, y) centers map to world through a
// planar pose and a zoom-out factor. At scale 1 the 128 px image spans the
// 1.5 m workspace; larger scales widen the footprint a pixel covers.
struct ViewTransform {
    PlanarTransform pose; // usually a pure rotation
    double scale = 1.0;
    double base_pixel_size = 1.5 / kObsSize;

    double pixel_world_size() const { return scale * base_pixel_size; }

    Eigen::Vector2d pixel_to_world(double px, double py) const {
        const double c = (kObsSize - 1) / 2.0;
        return pose.apply(Eigen::Vector2d((px - c) * pixel_world_size(), (py - c) * pixel_world_size()));
    }

    Eigen::Vector2d world_to_pixel(const Eigen::Vector2d& w) const {
        const double c = (kObsSize - 1) / 2.0;
        const Eigen::Vector2d local = pose.inverse().apply(w);
        return {local.x() / pixel_world_size() + c, local.y() / pixel_world_size() + c};
    }
};

// Normalized positional encoding shared across all stack entries:
// u along x, v along y, corners exactly (-1,-1) and (1,1).
struct CoordMap {
    std::vector<double> u; // kObsSize values
    std::vector<double> v;
};

std::shared_ptr<const CoordMap> make_coord_map();

struct Observation {
    BinaryMask cloth_mask;             // 128x128
    std::vector<double> height;       // row-major max-z per pixel, 0 where empty
    std::shared_ptr<const CoordMap> coords;
    ViewTransform view;
    int rotation_index = 0; // 0..15, angle = 2*pi*r/16
    int scale_index = 0;    // into kScales

    double height_at(int x, int y) const { return height[static_cast<size_t>(y) * kObsSize + x]; }
};

double rotation_angle(int rotation_index);

// Rasterizes the cloth triangles under the view: boolean coverage plus a
// max-z height channel.
Observation render_observation(const GarmentMesh& mesh, const VertexConfiguration& positions,
                               const PlanarTransform& view_pose, double scale,
                               std::shared_ptr<const CoordMap> coords = nullptr);

struct TransformStack {
    std::vector<Observation> entries; // scale-major, rotation-minor: k = s*16 + r
    std::shared_ptr<const CoordMap> coords;

    const Observation& entry(int scale_index, int rotation_index) const {
        return entries[static_cast<size_t>(scale_index) * kNumRotations + rotation_index];
    }
};

TransformStack build_stack(const GarmentMesh& mesh, const VertexConfiguration& positions);

struct ActionCommand {
    PrimitiveKind kind = PrimitiveKind::PickPlace;
    Eigen::Vector3d grasp_a = Eigen::Vector3d::Zero(); // decoded from (x, y+10)
    Eigen::Vector3d grasp_b = Eigen::Vector3d::Zero(); // decoded from (x, y-10)
    Eigen::Vector2d fling_dir = Eigen::Vector2d::UnitX(); // entry's +x axis in world
    int rotation_index = 0;
    int scale_index = 0;
    int px = 0;
    int py = 0;
};

// Maps the two offset pixels through the entry's inverse view into world
// coordinates; z comes from the height channel. Throws InvalidPixel when an
// offset pixel leaves the image.
ActionCommand decode_action(const Observation& entry, int px, int py, PrimitiveKind kind);

PrimitiveSpec to_primitive_spec(const ActionCommand& cmd);

struct ValidityGrid {
    std::vector<BinaryMask> per_entry;  // one 128x128 mask per stack entry
    std::vector<size_t> entry_counts;   // valid pixels per entry
    size_t valid_count = 0;
};

// A pixel is valid when both offset pixels stay inside the image, decoded
// world points stay inside the workspace, the grasp pair separation is
// within the 0.7 m stretch cap, the grasp pixel(s) land on cloth (both for
// fling, the pick pixel for pick&place), and a fling's placement footprint
// stays inside the workspace.
ValidityGrid validity_mask(const TransformStack& stack, PrimitiveKind kind,
                           double workspace_half = 0.75,
                           double max_pair_separation = 0.7);

// Value maps for one reward head: values[k] is a row-major 128x128 grid for
// stack entry k.
using ValueMaps = std::vector<std::vector<double>>;

// Predicted value grids per (primitive, reward-head) pair plus the validity
// masks that gate selection.
struct ValueStack {
    std::vector<PrimitiveKind> primitives;
    std::vector<ValueMaps> value_c;      // canonicalization head, per primitive
    std::vector<ValueMaps> value_a;      // alignment head, per primitive
    std::vector<ValidityGrid> validity;  // per primitive
};

struct Selection {
    PrimitiveKind kind = PrimitiveKind::PickPlace;
    int entry = 0;
    int px = 0;
    int py = 0;
    double value = 0.0;
};

// combined = (1-alpha) * valueC + alpha * valueA per pixel; argmax over
// primitives x entries x pixels honoring validity, ties broken by lowest
// (primitive, entry, y, x). Throws AllInvalid when no pixel is valid.
Selection combine_and_select(const ValueStack& stack, double alpha);

// Binary export: "CFOBS1\n" magic, dims header (K H W C, int64 little
// endian), then per entry row-major float64 channels mask, height, u, v.
void export_stack(const TransformStack& stack, const std::string& path);

} // namespace clothfit
