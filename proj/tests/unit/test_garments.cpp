#include "clothfit/garments.hpp"

#include "clothfit/errors.hpp"
#include "clothfit/text_io.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace clothfit;
using namespace clothfit::test;

namespace {

// Closed-form vertex count for the shirt generator, mirroring its
// quantization rules: body (nx+1)(ny+1), each sleeve adds ns_cols*(rows+1)
// (the seam column is shared).
int expected_shirt_vertices(const ShirtParams& in) {
    ShirtParams p = in;
    if (p.left_sleeve_length <= 0) p.left_sleeve_length = p.sleeve_length;
    if (p.right_sleeve_length <= 0) p.right_sleeve_length = p.sleeve_length;
    const auto cells = [&](double extent, double pitch) {
        return std::max(1, static_cast<int>(std::llround(extent / pitch)));
    };
    const int nbx = cells(p.body_width, p.grid_pitch);
    const int nby = cells(p.body_height, p.grid_pitch);
    const double pitch_y = p.body_height / nby;
    const int rows = std::min(nby, cells(p.sleeve_width, pitch_y));
    const int nlx = cells(p.left_sleeve_length, p.grid_pitch);
    const int nrx = cells(p.right_sleeve_length, p.grid_pitch);
    return (nbx + 1) * (nby + 1) + nlx * (rows + 1) + nrx * (rows + 1);
}

} // namespace

TEST_CASE("default shirt vertex count matches the closed form") {
    const ShirtParams p;
    const GarmentMesh shirt = make_shirt(p);
    CHECK(static_cast<int>(shirt.vertices.size()) == expected_shirt_vertices(p));
    validate_mesh(shirt);
}

TEST_CASE("randomized shirt params still match the closed-form count") {
    Rng rng(51);
    for (int trial = 0; trial < 10; ++trial) {
        ShirtParams p;
        p.body_width = rng.uniform(0.2, 0.5);
        p.body_height = rng.uniform(0.3, 0.6);
        p.sleeve_length = rng.uniform(0.1, 0.3);
        p.sleeve_width = rng.uniform(0.06, 0.2);
        p.grid_pitch = rng.uniform(0.02, 0.06);
        const GarmentMesh shirt = make_shirt(p);
        CHECK(static_cast<int>(shirt.vertices.size()) == expected_shirt_vertices(p));
        validate_mesh(shirt);
    }
}

TEST_CASE("shirt keypoints sit at the constructed extremes") {
    const ShirtParams p;
    const GarmentMesh shirt = make_shirt(p);
    const auto kp = [&](const char* name) {
        return shirt.vertices[static_cast<size_t>(shirt.keypoints.at(name))];
    };
    // x extents are exact by construction; the centroid shift only moves y.
    CHECK(kp("left_sleeve").x() ==
          doctest::Approx(-(p.body_width / 2 + p.sleeve_length)).epsilon(1e-12));
    CHECK(kp("right_sleeve").x() ==
          doctest::Approx(p.body_width / 2 + p.sleeve_length).epsilon(1e-12));
    CHECK(kp("left_shoulder").x() == doctest::Approx(-p.body_width / 2).epsilon(1e-12));
    CHECK(kp("left_waist").y() < kp("left_shoulder").y());
    // Sleeve tips share the shoulder line.
    CHECK(kp("left_sleeve").y() == doctest::Approx(kp("left_shoulder").y()).epsilon(1e-12));
}

TEST_CASE("pants have exactly four keypoints") {
    const GarmentMesh pants = make_pants();
    CHECK(pants.keypoints.size() == 4);
    CHECK(pants.keypoints.count("left_waist"));
    CHECK(pants.keypoints.count("right_waist"));
    CHECK(pants.keypoints.count("left_hem"));
    CHECK(pants.keypoints.count("right_hem"));
    validate_mesh(pants);
}

TEST_CASE("canonical meshes are planar, centered, and mirror symmetric") {
    for (const GarmentMesh& mesh : {make_shirt(), make_pants()}) {
        for (const auto& v : mesh.vertices) CHECK(v.z() == 0.0);
        const Eigen::Vector2d c = planar_centroid(mesh.vertices);
        CHECK(std::abs(c.x()) < 1e-9);
        CHECK(std::abs(c.y()) < 1e-9);

        // Vertex multiset invariant under x -> -x.
        std::vector<Eigen::Vector2d> pts, flipped;
        for (const auto& v : mesh.vertices) {
            pts.emplace_back(v.x(), v.y());
            flipped.emplace_back(-v.x(), v.y());
        }
        const auto lt = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
            return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
        };
        std::sort(pts.begin(), pts.end(), lt);
        std::sort(flipped.begin(), flipped.end(), lt);
        for (size_t i = 0; i < pts.size(); ++i) CHECK((pts[i] - flipped[i]).norm() < 1e-9);
    }
}

TEST_CASE("spring rest lengths equal canonical distances") {
    const GarmentMesh shirt = make_shirt();
    for (const auto& s : shirt.springs) {
        const double d = (shirt.vertices[static_cast<size_t>(s.i)] -
                          shirt.vertices[static_cast<size_t>(s.j)])
                             .norm();
        CHECK(std::abs(d - s.rest_length) < 1e-9);
    }
    // All three spring kinds are present.
    std::set<SpringKind> kinds;
    for (const auto& s : shirt.springs) kinds.insert(s.kind);
    CHECK(kinds.size() == 3);
}

TEST_CASE("arm_length") {
    const ShirtParams p;
    const GarmentMesh shirt = make_shirt(p);
    CHECK(arm_length(shirt) == doctest::Approx(p.sleeve_length).epsilon(1e-12));

    ShirtParams asym;
    asym.left_sleeve_length = 0.2;
    asym.right_sleeve_length = 0.25;
    const GarmentMesh lopsided = make_shirt(asym);
    CHECK(arm_length(lopsided) == doctest::Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(arm_length(make_pants()), WrongCategory);
}

TEST_CASE("arm_length equals the direct keypoint distance oracle") {
    Rng rng(52);
    for (int trial = 0; trial < 8; ++trial) {
        ShirtParams p;
        p.body_width = rng.uniform(0.25, 0.5);
        p.body_height = rng.uniform(0.3, 0.6);
        p.left_sleeve_length = rng.uniform(0.1, 0.3);
        p.right_sleeve_length = rng.uniform(0.1, 0.3);
        p.sleeve_width = rng.uniform(0.08, 0.15);
        const GarmentMesh shirt = make_shirt(p);
        const auto at = [&](const char* name) {
            return shirt.vertices[static_cast<size_t>(shirt.keypoints.at(name))];
        };
        const double left = (at("left_sleeve") - at("left_shoulder")).norm();
        const double right = (at("right_sleeve") - at("right_shoulder")).norm();
        CHECK(arm_length(shirt) == doctest::Approx(std::min(left, right)).epsilon(1e-12));
    }
}

TEST_CASE("invalid garment parameters are rejected") {
    ShirtParams tall;
    tall.body_height = 0.8;
    CHECK_THROWS_AS(make_shirt(tall), InvalidParams);

    ShirtParams bad;
    bad.body_width = -0.1;
    CHECK_THROWS_AS(make_shirt(bad), InvalidParams);

    PantsParams wide;
    wide.leg_width = 0.3; // legs would overlap
    CHECK_THROWS_AS(make_pants(wide), InvalidParams);
}

TEST_CASE("mesh save/load round-trip is bit exact") {
    Rng rng(53);
    ShirtParams p;
    p.body_width = rng.uniform(0.3, 0.45);
    p.sleeve_length = rng.uniform(0.15, 0.3);
    const GarmentMesh mesh = make_shirt(p);

    const std::string text = serialize_mesh(mesh);
    const GarmentMesh back = parse_mesh(text);

    REQUIRE(back.vertices.size() == mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        CHECK(back.vertices[i] == mesh.vertices[i]); // bitwise
    CHECK(back.triangles == mesh.triangles);
    REQUIRE(back.springs.size() == mesh.springs.size());
    for (size_t i = 0; i < mesh.springs.size(); ++i) {
        CHECK(back.springs[i].i == mesh.springs[i].i);
        CHECK(back.springs[i].j == mesh.springs[i].j);
        CHECK(back.springs[i].rest_length == mesh.springs[i].rest_length);
        CHECK(back.springs[i].kind == mesh.springs[i].kind);
    }
    CHECK(back.keypoints == mesh.keypoints);
    CHECK(back.params == mesh.params);
    CHECK(back.category == mesh.category);

    // Serialization is a fixpoint.
    CHECK(serialize_mesh(back) == text);
}

TEST_CASE("mesh parser rejects malformed input") {
    CHECK_THROWS_AS(parse_mesh("bogus"), ParseError);
    const GarmentMesh mesh = make_pants();
    std::string text = serialize_mesh(mesh);
    text.resize(text.size() / 2);
    CHECK_THROWS_AS(parse_mesh(text), ParseError);
}
