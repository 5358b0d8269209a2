#include "clothfit/rewards.hpp"

#include "clothfit/errors.hpp"
#include "clothfit/garments.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace clothfit;
using namespace clothfit::test;

TEST_CASE("normalization_scale") {
    const VertexConfiguration unit_square = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    CHECK(normalization_scale(unit_square) == doctest::Approx(1.0).epsilon(1e-15));

    const VertexConfiguration rect = {{0, 0, 0}, {0.5, 0, 0}, {0, 0.72, 0}, {0.5, 0.72, 0}};
    CHECK(normalization_scale(rect) == doctest::Approx(0.6).epsilon(1e-12));

    const VertexConfiguration flat = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_AS(normalization_scale(flat), ZeroExtent);
}

TEST_CASE("normalization_scale of the default shirt matches its bbox") {
    const GarmentMesh shirt = make_shirt();
    const Eigen::Vector2d ext = planar_extents(shirt.vertices);
    // Width spans both sleeves, height is the body height.
    CHECK(ext.x() == doctest::Approx(0.4 + 2 * 0.25).epsilon(1e-9));
    CHECK(ext.y() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(normalization_scale(shirt.vertices) ==
          doctest::Approx(std::sqrt(ext.x() * ext.y())).epsilon(1e-12));
}

TEST_CASE("reward_unfactorized") {
    Rng rng(31);
    const VertexConfiguration g = random_config(rng, 50);
    CHECK(reward_unfactorized(g, g, 0.7) == 0.0);

    const double d = 0.37;
    const VertexConfiguration moved = apply_transform(PlanarTransform::translation(d, 0), g);
    CHECK(reward_unfactorized(moved, g, 2.0) == doctest::Approx(-d / 2.0).epsilon(1e-12));

    const VertexConfiguration v = random_config(rng, 50);
    const double expected = -oracle_mean_distance(v, g) / 0.9;
    CHECK(reward_unfactorized(v, g, 0.9) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("reward_factorized on equal configurations") {
    Rng rng(32);
    const VertexConfiguration g = random_config(rng, 30);
    const RewardBreakdown r = reward_factorized(g, g, 0.6, 0.3, 1.0);
    CHECK(r.r_c == 0.0);
    CHECK(r.r_a == 0.0);
    CHECK(r.r_ca == 0.0);
    CHECK(r.r_unf == 0.0);
    CHECK(r.mirror_used == false);
}

TEST_CASE("reward_factorized splits a pure translation into alignment only") {
    Rng rng(33);
    const VertexConfiguration g = random_config(rng, 40);
    const double scale = normalization_scale(g);
    const double d = 0.25;
    const VertexConfiguration v = apply_transform(PlanarTransform::translation(d, 0), g);

    const RewardBreakdown r = reward_factorized(v, g, 0.6, 0.3, scale);
    CHECK(std::abs(r.r_c) < 1e-9);
    CHECK(r.r_a == doctest::Approx(-d / scale).epsilon(1e-9));
    CHECK(r.r_ca == doctest::Approx(-0.6 * d / scale).epsilon(1e-9));
    CHECK(r.r_unf == doctest::Approx(-d / scale).epsilon(1e-12));
}

TEST_CASE("r_ca is the alpha blend of its parts, by reconstruction") {
    Rng rng(34);
    for (int trial = 0; trial < 200; ++trial) {
        const VertexConfiguration g = random_config(rng, 20);
        const VertexConfiguration v = random_config(rng, 20);
        const double alpha = rng.uniform(0.1, 0.9);
        const RewardBreakdown r = reward_factorized(v, g, alpha, 0.3, 1.0);
        CHECK(r.r_ca == (1.0 - alpha) * r.r_c + alpha * r.r_a); // exact
        CHECK(r.r_unf <= 0.0);
        CHECK(r.r_c <= 0.0);
        CHECK(r.r_a <= 0.0);
    }
}

TEST_CASE("mirror branch wins on a mirror image of an asymmetric garment") {
    PantsParams p;
    p.left_leg_length = 0.25; // one leg shortened
    const GarmentMesh pants = make_pants(p);
    const VertexConfiguration& g = pants.vertices;
    const double scale = normalization_scale(g);

    // v is the goal mirror-flipped in its own (identity) frame.
    const PlanarTransform mirror = PlanarTransform::mirror_in_frame(PlanarTransform::identity());
    const VertexConfiguration v = apply_transform(mirror, g);

    const RewardBreakdown r = reward_factorized(v, g, 0.6, 0.3, scale);
    CHECK(r.mirror_used);
    CHECK(r.r_ca == doctest::Approx(0.0).epsilon(1e-9));

    // Explicitly evaluate the non-mirrored branch: align g directly to v.
    const AlignmentResult plain = trimmed_align(v, g, 0.3, scale);
    double mean_c = 0;
    for (size_t i = 0; i < v.size(); ++i)
        mean_c += (planar(v[i]) - planar(plain.aligned_goal[i])).norm();
    mean_c /= static_cast<double>(v.size()) * scale;
    double mean_a = 0;
    for (size_t i = 0; i < v.size(); ++i)
        mean_a += (planar(plain.aligned_goal[i]) - planar(g[i])).norm();
    mean_a /= static_cast<double>(v.size()) * scale;
    const double plain_rca = 0.4 * -mean_c + 0.6 * -mean_a;
    CHECK(r.r_ca > plain_rca);
}

TEST_CASE("reward is mirror symmetric for a symmetric goal") {
    const GarmentMesh shirt = make_shirt();
    const VertexConfiguration& g = shirt.vertices;
    const double scale = normalization_scale(g);
    const PlanarTransform mirror = PlanarTransform::mirror_in_frame(PlanarTransform::identity());

    Rng rng(35);
    for (int trial = 0; trial < 5; ++trial) {
        VertexConfiguration v = g;
        for (auto& pt : v)
            pt += Eigen::Vector3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0);
        const RewardBreakdown a = reward_factorized(v, g, 0.6, 0.3, scale);
        const RewardBreakdown b = reward_factorized(apply_transform(mirror, v), g, 0.6, 0.3, scale);
        CHECK(std::abs(a.r_ca - b.r_ca) < 1e-6);
    }
}

TEST_CASE("rigid invariance of the canonicalization reward") {
    // Holds when all vertices stay inliers under the selected branch, i.e.
    // away from the mirror-selection boundary: a large pose offset on a
    // near-symmetric garment can legitimately flip the argmax to the
    // mirrored goal, and r_c jumps there by design.
    Rng rng(36);
    const GarmentMesh shirt = make_shirt();
    const VertexConfiguration& g = shirt.vertices;
    const double scale = normalization_scale(g);

    VertexConfiguration v = g;
    for (auto& pt : v)
        pt += Eigen::Vector3d(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), 0);

    const RewardBreakdown base = reward_factorized(v, g, 0.6, 0.3, scale);
    REQUIRE(base.alignment.inlier_indices.size() == g.size());
    for (int trial = 0; trial < 10; ++trial) {
        PlanarTransform t;
        t.tx = rng.uniform(-0.05, 0.05);
        t.ty = rng.uniform(-0.05, 0.05);
        t.theta = rng.uniform(-0.3, 0.3);
        const RewardBreakdown moved = reward_factorized(apply_transform(t, v), g, 0.6, 0.3, scale);
        REQUIRE(moved.alignment.inlier_indices.size() == g.size());
        CHECK(std::abs(moved.r_c - base.r_c) < 1e-6);
    }
}

TEST_CASE("uniform scaling leaves normalized rewards unchanged") {
    Rng rng(37);
    const GarmentMesh shirt = make_shirt();
    const VertexConfiguration& g = shirt.vertices;
    VertexConfiguration v = g;
    for (auto& pt : v)
        pt += Eigen::Vector3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0);

    const double k = 2.7;
    VertexConfiguration gk = g, vk = v;
    for (auto& pt : gk) pt *= k;
    for (auto& pt : vk) pt *= k;

    const RewardBreakdown a = reward_factorized(v, g, 0.6, 0.3, normalization_scale(g));
    const RewardBreakdown b = reward_factorized(vk, gk, 0.6, 0.3, normalization_scale(gk));
    CHECK(std::abs(a.r_unf - b.r_unf) < 1e-9);
    CHECK(std::abs(a.r_c - b.r_c) < 1e-9);
    CHECK(std::abs(a.r_a - b.r_a) < 1e-9);
}

TEST_CASE("untrimmed fallback cannot worsen the squared residual vs identity") {
    Rng rng(38);
    for (int trial = 0; trial < 50; ++trial) {
        const VertexConfiguration g = random_config(rng, 25);
        VertexConfiguration v = g;
        for (auto& pt : v)
            pt += Eigen::Vector3d(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0);
        // Tiny tau forces the untrimmed fallback.
        const AlignmentResult r = trimmed_align(v, g, 1e-9, 1.0);
        REQUIRE(r.untrimmed_fallback);
        double sq_before = 0, sq_after = 0;
        for (size_t i = 0; i < g.size(); ++i) {
            sq_before += (planar(v[i]) - planar(g[i])).squaredNorm();
            sq_after += (planar(v[i]) - planar(r.aligned_goal[i])).squaredNorm();
        }
        CHECK(sq_after <= sq_before + 1e-12);
    }
}

TEST_CASE("delta_reward") {
    Rng rng(39);
    const VertexConfiguration g = random_config(rng, 20);
    const VertexConfiguration v = random_config(rng, 20);
    const RewardBreakdown a = reward_factorized(v, g, 0.6, 0.3, 1.0);
    CHECK(delta_reward(a, a) == 0.0);

    RewardBreakdown before = a, after = a;
    before.r_ca = -0.5;
    after.r_ca = -0.2;
    CHECK(delta_reward(before, after) == doctest::Approx(0.3).epsilon(1e-12));

    RewardBreakdown other = a;
    other.scale = a.scale * 2;
    CHECK_THROWS_AS(delta_reward(a, other), MismatchedContext);
}

TEST_CASE("a restoring translation yields +alpha*d/scale") {
    Rng rng(40);
    const VertexConfiguration g = random_config(rng, 30);
    const double scale = normalization_scale(g);
    const double d = 0.15;
    const VertexConfiguration v = apply_transform(PlanarTransform::translation(d, 0), g);
    const RewardBreakdown before = reward_factorized(v, g, 0.6, 0.3, scale);
    const RewardBreakdown after = reward_factorized(g, g, 0.6, 0.3, scale);
    CHECK(delta_reward(before, after) == doctest::Approx(0.6 * d / scale).epsilon(1e-9));
}

TEST_CASE("mask iou and coverage") {
    BinaryMask a = make_mask(128, 128);
    BinaryMask b = make_mask(128, 128);

    // Both empty: vacuous agreement.
    CHECK(iou(a, b) == 1.0);

    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) a.set(x, y, true);
    b = a;
    CHECK(iou(a, b) == 1.0);
    CHECK(coverage(a, b) == 1.0);

    // Disjoint equal-area masks.
    BinaryMask c = make_mask(128, 128);
    for (int y = 64; y < 128; ++y)
        for (int x = 64; x < 128; ++x) c.set(x, y, true);
    CHECK(iou(a, c) == 0.0);
    CHECK(coverage(a, c) == 1.0);

    // Two 64x64 squares overlapping in a 32x64 strip.
    BinaryMask d = make_mask(128, 128);
    for (int y = 0; y < 64; ++y)
        for (int x = 32; x < 96; ++x) d.set(x, y, true);
    CHECK(iou(a, d) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    BinaryMask small = make_mask(64, 64);
    CHECK_THROWS_AS(iou(a, small), DimensionMismatch);
    CHECK_THROWS_AS(coverage(a, small), DimensionMismatch);
}

TEST_CASE("iou properties") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        BinaryMask a = make_mask(32, 32);
        BinaryMask b = make_mask(32, 32);
        for (int i = 0; i < 32 * 32; ++i) {
            a.bits[static_cast<size_t>(i)] = rng.uniform() < 0.3;
            b.bits[static_cast<size_t>(i)] = rng.uniform() < 0.3;
        }
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        if (ab == 1.0) CHECK(a.bits == b.bits);
    }
}
