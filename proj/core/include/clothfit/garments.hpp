#pragma once

#include "clothfit/geometry.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace clothfit {

enum class GarmentCategory { Shirt, Pants };

const char* category_name(GarmentCategory c);
GarmentCategory category_from_name(const std::string& name);

enum class SpringKind { Structural, Shear, Bend };

struct Spring {
    int i = 0;
    int j = 0;
    double rest_length = 0.0;
    SpringKind kind = SpringKind::Structural;
};

// A procedurally generated garment in its canonical flat pose: centroid at
// the origin, all vertices on the z = 0 plane.
struct GarmentMesh {
    GarmentCategory category = GarmentCategory::Shirt;
    VertexConfiguration vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Spring> springs;
    std::map<std::string, int> keypoints;
    std::vector<std::pair<std::string, double>> params;
};

// Shirt: T-shape, body rectangle with a sleeve attached at each shoulder.
// Extents along x (body width, sleeve length) and body height are honored
// exactly; sleeve width snaps to whole body grid rows so the sleeve stitches
// onto shared vertices. Left/right sleeve lengths of 0 inherit sleeve_length.
struct ShirtParams {
    double body_width = 0.40;
    double body_height = 0.50;
    double sleeve_length = 0.25;
    double sleeve_width = 0.12;
    double grid_pitch = 0.025;
    double left_sleeve_length = 0.0;
    double right_sleeve_length = 0.0;
};

// Pants: inverted V, a waistband with two legs and a gap between them.
// Leg width snaps to whole grid columns. Leg lengths of 0 inherit
// height - rise.
struct PantsParams {
    double waist_width = 0.35;
    double height = 0.60;
    double leg_width = 0.14;
    double rise = 0.20;
    double grid_pitch = 0.025;
    double left_leg_length = 0.0;
    double right_leg_length = 0.0;
};

GarmentMesh make_shirt(const ShirtParams& params = {});
GarmentMesh make_pants(const PantsParams& params = {});

// Minimum canonical sleeve-to-shoulder keypoint distance over both arms.
double arm_length(const GarmentMesh& mesh);

// Throws on violated mesh invariants (connectivity, rest lengths,
// orphan vertices, missing keypoints).
void validate_mesh(const GarmentMesh& mesh);

// Self-describing text format; doubles carry 17 significant digits so a
// save/load round-trip reproduces the mesh bit-exactly.
std::string serialize_mesh(const GarmentMesh& mesh);
GarmentMesh parse_mesh(const std::string& text);
void save_mesh(const GarmentMesh& mesh, const std::string& path);
GarmentMesh load_mesh(const std::string& path);

} // namespace clothfit
