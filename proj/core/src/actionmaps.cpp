#include "clothfit/actionmaps.hpp"

#include "clothfit/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace clothfit {

std::shared_ptr<const CoordMap> make_coord_map() {
    auto cm = std::make_shared<CoordMap>();
    cm->u.resize(kObsSize);
    cm->v.resize(kObsSize);
    for (int i = 0; i < kObsSize; ++i) {
        const double t = (2.0 * i - (kObsSize - 1)) / (kObsSize - 1);
        cm->u[static_cast<size_t>(i)] = t;
        cm->v[static_cast<size_t>(i)] = t;
    }
    return cm;
}

double rotation_angle(int rotation_index) {
    return 2.0 * M_PI * rotation_index / kNumRotations;
}

namespace {

// Inclusive point-in-triangle via signed edge functions, winding-agnostic.
struct TriangleRaster {
    Eigen::Vector2d a, b, c;
    double za, zb, zc;
    double area2;

    bool degenerate() const { return std::abs(area2) < 1e-12; }

    bool barycentric(double px, double py, double& wa, double& wb, double& wc) const {
        const double w0 = (b.x() - px) * (c.y() - py) - (c.x() - px) * (b.y() - py);
        const double w1 = (c.x() - px) * (a.y() - py) - (a.x() - px) * (c.y() - py);
        const double w2 = (a.x() - px) * (b.y() - py) - (b.x() - px) * (a.y() - py);
        const double s = area2 > 0 ? 1.0 : -1.0;
        if (s * w0 < 0 || s * w1 < 0 || s * w2 < 0) return false;
        wa = w0 / area2;
        wb = w1 / area2;
        wc = w2 / area2;
        return true;
    }
};

} // namespace

Observation render_observation(const GarmentMesh& mesh, const VertexConfiguration& positions,
                               const PlanarTransform& view_pose, double scale,
                               std::shared_ptr<const CoordMap> coords) {
    if (!(scale > 0.0)) throw InvalidParams("render_observation: scale must be positive");

    Observation obs;
    obs.view.pose = view_pose;
    obs.view.scale = scale;
    obs.cloth_mask = make_mask(kObsSize, kObsSize);
    obs.height.assign(static_cast<size_t>(kObsSize) * kObsSize, 0.0);
    obs.coords = coords ? std::move(coords) : make_coord_map();

    // Project once, rasterize per triangle in pixel space.
    std::vector<Eigen::Vector2d> px(positions.size());
    for (size_t i = 0; i < positions.size(); ++i)
        px[i] = obs.view.world_to_pixel(planar(positions[i]));

    for (const auto& t : mesh.triangles) {
        TriangleRaster tr{px[static_cast<size_t>(t[0])], px[static_cast<size_t>(t[1])],
                          px[static_cast<size_t>(t[2])], positions[static_cast<size_t>(t[0])].z(),
                          positions[static_cast<size_t>(t[1])].z(),
                          positions[static_cast<size_t>(t[2])].z(), 0.0};
        tr.area2 = (tr.b.x() - tr.a.x()) * (tr.c.y() - tr.a.y()) -
                   (tr.c.x() - tr.a.x()) * (tr.b.y() - tr.a.y());
        if (tr.degenerate()) continue;

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({tr.a.x(), tr.b.x(), tr.c.x()}))));
        const int x1 = std::min(kObsSize - 1, static_cast<int>(std::ceil(std::max({tr.a.x(), tr.b.x(), tr.c.x()}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({tr.a.y(), tr.b.y(), tr.c.y()}))));
        const int y1 = std::min(kObsSize - 1, static_cast<int>(std::ceil(std::max({tr.a.y(), tr.b.y(), tr.c.y()}))));

        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double wa, wb, wc;
                if (!tr.barycentric(x, y, wa, wb, wc)) continue;
                obs.cloth_mask.set(x, y, true);
                const double z = wa * tr.za + wb * tr.zb + wc * tr.zc;
                double& h = obs.height[static_cast<size_t>(y) * kObsSize + x];
                h = std::max(h, z);
            }
    }
    return obs;
}

TransformStack build_stack(const GarmentMesh& mesh, const VertexConfiguration& positions) {
    TransformStack stack;
    stack.coords = make_coord_map();
    stack.entries.reserve(kStackSize);
    for (size_t si = 0; si < kScales.size(); ++si)
        for (int r = 0; r < kNumRotations; ++r) {
            Observation obs = render_observation(mesh, positions,
                                                 PlanarTransform::rotation(rotation_angle(r)),
                                                 kScales[si], stack.coords);
            obs.rotation_index = r;
            obs.scale_index = static_cast<int>(si);
            stack.entries.push_back(std::move(obs));
        }
    return stack;
}

ActionCommand decode_action(const Observation& entry, int px, int py, PrimitiveKind kind) {
    const int ya = py + kGraspPixelOffset;
    const int yb = py - kGraspPixelOffset;
    if (px < 0 || px >= kObsSize || ya >= kObsSize || yb < 0)
        throw InvalidPixel("decode_action: grasp pixels leave the image");

    ActionCommand cmd;
    cmd.kind = kind;
    cmd.rotation_index = entry.rotation_index;
    cmd.scale_index = entry.scale_index;
    cmd.px = px;
    cmd.py = py;

    const Eigen::Vector2d wa = entry.view.pixel_to_world(px, ya);
    const Eigen::Vector2d wb = entry.view.pixel_to_world(px, yb);
    cmd.grasp_a = {wa.x(), wa.y(), entry.height_at(px, ya)};
    cmd.grasp_b = {wb.x(), wb.y(), entry.height_at(px, yb)};

    // The fling swings along the entry's +x axis: perpendicular to the
    // gripper line (which runs along image y), oriented by the rotation
    // that produced this entry.
    const Eigen::Matrix2d rot = entry.view.pose.linear();
    cmd.fling_dir = rot.col(0);
    return cmd;
}

PrimitiveSpec to_primitive_spec(const ActionCommand& cmd) {
    PrimitiveSpec spec;
    spec.kind = cmd.kind;
    spec.grasp_a = cmd.grasp_a;
    spec.grasp_b = cmd.grasp_b;
    spec.fling_dir = cmd.fling_dir;
    return spec;
}

ValidityGrid validity_mask(const TransformStack& stack, PrimitiveKind kind, double workspace_half,
                           double max_pair_separation) {
    ValidityGrid grid;
    grid.per_entry.reserve(stack.entries.size());

    for (const auto& entry : stack.entries) {
        BinaryMask valid = make_mask(kObsSize, kObsSize);
        size_t count = 0;
        const double sep = 2.0 * kGraspPixelOffset * entry.view.pixel_world_size();
        if (sep > max_pair_separation) {
            grid.per_entry.push_back(std::move(valid));
            grid.entry_counts.push_back(0); // whole entry out of reach at this zoom
            continue;
        }
        const Eigen::Matrix2d rot = entry.view.pose.linear();
        const Eigen::Vector2d fwd = rot.col(0);
        const Eigen::Vector2d side = rot.col(1);

        for (int y = kGraspPixelOffset; y < kObsSize - kGraspPixelOffset; ++y)
            for (int x = 0; x < kObsSize; ++x) {
                const int ya = y + kGraspPixelOffset, yb = y - kGraspPixelOffset;
                if (!entry.cloth_mask.at(x, ya)) continue; // grasp (pick) pixel on cloth
                if (kind == PrimitiveKind::Fling && !entry.cloth_mask.at(x, yb)) continue;

                const Eigen::Vector2d wa = entry.view.pixel_to_world(x, ya);
                const Eigen::Vector2d wb = entry.view.pixel_to_world(x, yb);
                if (wa.cwiseAbs().maxCoeff() > workspace_half ||
                    wb.cwiseAbs().maxCoeff() > workspace_half)
                    continue;

                if (kind == PrimitiveKind::Fling) {
                    // Estimated landing footprint: half the swing distance
                    // in every direction around the grasp midpoint.
                    const Eigen::Vector2d mid = 0.5 * (wa + wb);
                    const double r = 0.35;
                    bool inside = true;
                    for (int sx = -1; sx <= 1 && inside; sx += 2)
                        for (int sy = -1; sy <= 1 && inside; sy += 2) {
                            const Eigen::Vector2d corner = mid + r * sx * fwd + r * sy * side;
                            if (corner.cwiseAbs().maxCoeff() > workspace_half) inside = false;
                        }
                    if (!inside) continue;
                }
                valid.set(x, y, true);
                ++count;
            }
        grid.valid_count += count;
        grid.entry_counts.push_back(count);
        grid.per_entry.push_back(std::move(valid));
    }
    return grid;
}

Selection combine_and_select(const ValueStack& stack, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidParams("combine_and_select: alpha must be in (0, 1)");
    const size_t np = stack.primitives.size();
    if (stack.value_c.size() != np || stack.value_a.size() != np || stack.validity.size() != np)
        throw DimensionMismatch("combine_and_select: per-primitive sizes disagree");

    Selection best;
    double best_value = -std::numeric_limits<double>::infinity();
    bool found = false;

    for (size_t p = 0; p < np; ++p) {
        const ValueMaps& vc = stack.value_c[p];
        const ValueMaps& va = stack.value_a[p];
        if (vc.size() != va.size() || vc.size() != stack.validity[p].per_entry.size())
            throw DimensionMismatch("combine_and_select: entry counts disagree");
        for (size_t k = 0; k < vc.size(); ++k) {
            const auto& gc = vc[k];
            const auto& ga = va[k];
            const auto& ok = stack.validity[p].per_entry[k];
            for (int y = 0; y < kObsSize; ++y)
                for (int x = 0; x < kObsSize; ++x) {
                    if (!ok.at(x, y)) continue;
                    const size_t i = static_cast<size_t>(y) * kObsSize + x;
                    const double v = (1.0 - alpha) * gc[i] + alpha * ga[i];
                    if (!found || v > best_value) {
                        found = true;
                        best_value = v;
                        best = {stack.primitives[p], static_cast<int>(k), x, y, v};
                    }
                }
        }
    }
    if (!found) throw AllInvalid("combine_and_select: no valid pixel");
    return best;
}

void export_stack(const TransformStack& stack, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("export_stack: cannot write " + path);
    out.write("CFOBS1\n", 7);
    const int64_t dims[4] = {static_cast<int64_t>(stack.entries.size()), kObsSize, kObsSize, 4};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    std::vector<double> row(static_cast<size_t>(kObsSize));
    for (const auto& e : stack.entries) {
        for (int y = 0; y < kObsSize; ++y) {
            for (int x = 0; x < kObsSize; ++x) row[static_cast<size_t>(x)] = e.cloth_mask.at(x, y) ? 1.0 : 0.0;
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 8));
        }
        out.write(reinterpret_cast<const char*>(e.height.data()),
                  static_cast<std::streamsize>(e.height.size() * 8));
        for (int y = 0; y < kObsSize; ++y) {
            for (int x = 0; x < kObsSize; ++x) row[static_cast<size_t>(x)] = e.coords->u[static_cast<size_t>(x)];
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 8));
        }
        for (int y = 0; y < kObsSize; ++y) {
            for (int x = 0; x < kObsSize; ++x) row[static_cast<size_t>(x)] = e.coords->v[static_cast<size_t>(y)];
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 8));
        }
    }
    if (!out) throw Error("export_stack: write failed: " + path);
}

} // namespace clothfit
