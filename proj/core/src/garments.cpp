#include "clothfit/garments.hpp"

#include "clothfit/errors.hpp"
#include "clothfit/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace clothfit {

const char* category_name(GarmentCategory c) {
    return c == GarmentCategory::Shirt ? "shirt" : "pants";
}

GarmentCategory category_from_name(const std::string& name) {
    if (name == "shirt") return GarmentCategory::Shirt;
    if (name == "pants") return GarmentCategory::Pants;
    throw ParseError("unknown garment category: " + name);
}

namespace {

const char* spring_kind_name(SpringKind k) {
    switch (k) {
        case SpringKind::Structural: return "structural";
        case SpringKind::Shear: return "shear";
        default: return "bend";
    }
}

SpringKind spring_kind_from_name(std::string_view s) {
    if (s == "structural") return SpringKind::Structural;
    if (s == "shear") return SpringKind::Shear;
    if (s == "bend") return SpringKind::Bend;
    throw ParseError("unknown spring kind: " + std::string(s));
}

int cell_count(double extent, double pitch) {
    return std::max(1, static_cast<int>(std::llround(extent / pitch)));
}

// Rectangular grid patches stitched into one mesh. Vertices are created on
// demand; a patch column can be redirected onto existing vertices (sleeve to
// body seam).
class MeshBuilder {
public:
    int add_vertex(double x, double y) {
        vertices_.emplace_back(x, y, 0.0);
        return static_cast<int>(vertices_.size()) - 1;
    }

    void add_triangle(int a, int b, int c) { triangles_.push_back({a, b, c}); }

    void add_spring(int a, int b, SpringKind kind) {
        if (a > b) std::swap(a, b);
        edges_.insert({a, b, kind});
    }

    // Grid bookkeeping for one rectangular patch: index(i, j) for
    // i in [0, nx], j in [0, ny].
    struct Patch {
        int nx = 0, ny = 0;
        std::vector<int> index; // (nx+1) * (ny+1)
        int& at(int i, int j) { return index[static_cast<size_t>(j) * (nx + 1) + i]; }
        int at(int i, int j) const { return index[static_cast<size_t>(j) * (nx + 1) + i]; }
    };

    // xs/ys are the grid line coordinates (sizes nx+1, ny+1). shared maps a
    // (i, j) grid node to an existing vertex id, or -1 to allocate.
    Patch build_patch(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::function<int(int, int)>& shared) {
        Patch p;
        p.nx = static_cast<int>(xs.size()) - 1;
        p.ny = static_cast<int>(ys.size()) - 1;
        p.index.assign(static_cast<size_t>(p.nx + 1) * (p.ny + 1), -1);
        for (int j = 0; j <= p.ny; ++j)
            for (int i = 0; i <= p.nx; ++i) {
                int existing = shared ? shared(i, j) : -1;
                p.at(i, j) = existing >= 0 ? existing : add_vertex(xs[i], ys[j]);
            }
        connect_patch(p);
        return p;
    }

    GarmentMesh finish(GarmentCategory category,
                       std::map<std::string, int> keypoints,
                       std::vector<std::pair<std::string, double>> params) {
        GarmentMesh mesh;
        mesh.category = category;
        mesh.vertices = std::move(vertices_);
        mesh.triangles = std::move(triangles_);
        mesh.keypoints = std::move(keypoints);
        mesh.params = std::move(params);

        // Center the canonical centroid on the origin.
        const Eigen::Vector2d c = planar_centroid(mesh.vertices);
        for (auto& v : mesh.vertices) {
            v.x() -= c.x();
            v.y() -= c.y();
        }

        mesh.springs.reserve(edges_.size());
        for (const auto& [a, b, kind] : edges_) {
            Spring s;
            s.i = a;
            s.j = b;
            s.kind = kind;
            s.rest_length = (mesh.vertices[a] - mesh.vertices[b]).norm();
            mesh.springs.push_back(s);
        }
        return mesh;
    }

private:
    void connect_patch(const Patch& p) {
        for (int j = 0; j < p.ny; ++j)
            for (int i = 0; i < p.nx; ++i) {
                const int v00 = p.at(i, j), v10 = p.at(i + 1, j);
                const int v01 = p.at(i, j + 1), v11 = p.at(i + 1, j + 1);
                add_triangle(v00, v10, v11);
                add_triangle(v00, v11, v01);
                add_spring(v00, v11, SpringKind::Shear);
                add_spring(v10, v01, SpringKind::Shear);
            }
        for (int j = 0; j <= p.ny; ++j)
            for (int i = 0; i < p.nx; ++i) add_spring(p.at(i, j), p.at(i + 1, j), SpringKind::Structural);
        for (int j = 0; j < p.ny; ++j)
            for (int i = 0; i <= p.nx; ++i) add_spring(p.at(i, j), p.at(i, j + 1), SpringKind::Structural);
        for (int j = 0; j <= p.ny; ++j)
            for (int i = 0; i + 2 <= p.nx; ++i) add_spring(p.at(i, j), p.at(i + 2, j), SpringKind::Bend);
        for (int j = 0; j + 2 <= p.ny; ++j)
            for (int i = 0; i <= p.nx; ++i) add_spring(p.at(i, j), p.at(i, j + 2), SpringKind::Bend);
    }

    VertexConfiguration vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::set<std::tuple<int, int, SpringKind>> edges_;
};

// Symmetric lerp: mirrored ranges produce bitwise-negated coordinates, so
// left/right garment parts stay exactly mirror symmetric.
std::vector<double> grid_lines(double lo, double hi, int cells) {
    std::vector<double> xs(static_cast<size_t>(cells) + 1);
    for (int i = 0; i <= cells; ++i)
        xs[static_cast<size_t>(i)] =
            (lo * static_cast<double>(cells - i) + hi * static_cast<double>(i)) / cells;
    return xs;
}

} // namespace

GarmentMesh make_shirt(const ShirtParams& in) {
    ShirtParams p = in;
    if (p.left_sleeve_length <= 0.0) p.left_sleeve_length = p.sleeve_length;
    if (p.right_sleeve_length <= 0.0) p.right_sleeve_length = p.sleeve_length;
    if (p.body_width <= 0 || p.body_height <= 0 || p.sleeve_width <= 0 || p.grid_pitch <= 0 ||
        p.left_sleeve_length <= 0 || p.right_sleeve_length <= 0)
        throw InvalidParams("make_shirt: all dimensions must be positive");
    if (p.body_height > 0.7)
        throw InvalidParams("make_shirt: garment height exceeds the 0.7 m cap");

    const int nbx = cell_count(p.body_width, p.grid_pitch);
    const int nby = cell_count(p.body_height, p.grid_pitch);
    const double pitch_y = p.body_height / nby;
    const int sleeve_rows = std::min(nby, cell_count(p.sleeve_width, pitch_y));

    const double x_left = -p.body_width / 2, x_right = p.body_width / 2;
    const double y_bottom = -p.body_height / 2, y_top = p.body_height / 2;

    MeshBuilder b;
    auto body = b.build_patch(grid_lines(x_left, x_right, nbx), grid_lines(y_bottom, y_top, nby), nullptr);

    // Sleeves share the body's top rows along each side seam.
    const int j0 = nby - sleeve_rows; // body row where the sleeve band starts
    const auto sleeve_ys = grid_lines(y_bottom + j0 * (p.body_height / nby), y_top, sleeve_rows);

    const int nlx = cell_count(p.left_sleeve_length, p.grid_pitch);
    auto left = b.build_patch(grid_lines(x_left - p.left_sleeve_length, x_left, nlx), sleeve_ys,
                              [&](int i, int j) { return i == nlx ? body.at(0, j0 + j) : -1; });

    const int nrx = cell_count(p.right_sleeve_length, p.grid_pitch);
    auto right = b.build_patch(grid_lines(x_right, x_right + p.right_sleeve_length, nrx), sleeve_ys,
                               [&](int i, int j) { return i == 0 ? body.at(nbx, j0 + j) : -1; });

    std::map<std::string, int> kp;
    kp["left_sleeve"] = left.at(0, sleeve_rows);
    kp["right_sleeve"] = right.at(nrx, sleeve_rows);
    kp["left_shoulder"] = body.at(0, nby);
    kp["right_shoulder"] = body.at(nbx, nby);
    kp["left_waist"] = body.at(0, 0);
    kp["right_waist"] = body.at(nbx, 0);

    return b.finish(GarmentCategory::Shirt, std::move(kp),
                    {{"body_width", p.body_width},
                     {"body_height", p.body_height},
                     {"sleeve_length", p.sleeve_length},
                     {"sleeve_width", p.sleeve_width},
                     {"grid_pitch", p.grid_pitch},
                     {"left_sleeve_length", p.left_sleeve_length},
                     {"right_sleeve_length", p.right_sleeve_length}});
}

GarmentMesh make_pants(const PantsParams& in) {
    PantsParams p = in;
    const double default_leg = p.height - p.rise;
    if (p.left_leg_length <= 0.0) p.left_leg_length = default_leg;
    if (p.right_leg_length <= 0.0) p.right_leg_length = default_leg;
    if (p.waist_width <= 0 || p.height <= 0 || p.leg_width <= 0 || p.rise <= 0 || p.grid_pitch <= 0 ||
        p.left_leg_length <= 0 || p.right_leg_length <= 0)
        throw InvalidParams("make_pants: all dimensions must be positive");
    if (p.height > 0.7) throw InvalidParams("make_pants: garment height exceeds the 0.7 m cap");
    if (p.rise >= p.height) throw InvalidParams("make_pants: rise must be smaller than height");
    if (p.left_leg_length > p.height - p.rise || p.right_leg_length > p.height - p.rise)
        throw InvalidParams("make_pants: leg length exceeds height - rise");

    const int nx = cell_count(p.waist_width, p.grid_pitch);
    const double pitch_x = p.waist_width / nx;
    const int leg_cols = std::min(nx, cell_count(p.leg_width, pitch_x));
    if (2 * leg_cols >= nx)
        throw InvalidParams("make_pants: legs overlap; reduce leg_width or widen the waist");

    const double y_top = p.height / 2;
    const double x_left = -p.waist_width / 2, x_right = p.waist_width / 2;

    MeshBuilder b;
    const int waist_rows = cell_count(p.rise, p.grid_pitch);
    auto waist = b.build_patch(grid_lines(x_left, x_right, nx),
                               grid_lines(y_top - p.rise, y_top, waist_rows), nullptr);

    const int left_rows = cell_count(p.left_leg_length, p.grid_pitch);
    auto left = b.build_patch(grid_lines(x_left, x_left + leg_cols * pitch_x, leg_cols),
                              grid_lines(y_top - p.rise - p.left_leg_length, y_top - p.rise, left_rows),
                              [&](int i, int j) { return j == left_rows ? waist.at(i, 0) : -1; });

    const int right_rows = cell_count(p.right_leg_length, p.grid_pitch);
    auto right =
        b.build_patch(grid_lines(x_right - leg_cols * pitch_x, x_right, leg_cols),
                      grid_lines(y_top - p.rise - p.right_leg_length, y_top - p.rise, right_rows),
                      [&](int i, int j) { return j == right_rows ? waist.at(nx - leg_cols + i, 0) : -1; });

    std::map<std::string, int> kp;
    kp["left_waist"] = waist.at(0, waist_rows);
    kp["right_waist"] = waist.at(nx, waist_rows);
    kp["left_hem"] = left.at(0, 0);
    kp["right_hem"] = right.at(leg_cols, 0);

    return b.finish(GarmentCategory::Pants, std::move(kp),
                    {{"waist_width", p.waist_width},
                     {"height", p.height},
                     {"leg_width", p.leg_width},
                     {"rise", p.rise},
                     {"grid_pitch", p.grid_pitch},
                     {"left_leg_length", p.left_leg_length},
                     {"right_leg_length", p.right_leg_length}});
}

double arm_length(const GarmentMesh& mesh) {
    if (mesh.category != GarmentCategory::Shirt)
        throw WrongCategory("arm_length: defined for shirts only");
    const auto dist = [&](const char* a, const char* b) {
        return (mesh.vertices[static_cast<size_t>(mesh.keypoints.at(a))] -
                mesh.vertices[static_cast<size_t>(mesh.keypoints.at(b))])
            .norm();
    };
    return std::min(dist("left_sleeve", "left_shoulder"), dist("right_sleeve", "right_shoulder"));
}

void validate_mesh(const GarmentMesh& mesh) {
    const int n = static_cast<int>(mesh.vertices.size());
    if (n < 3) throw InvalidParams("mesh: fewer than 3 vertices");

    std::vector<char> in_triangle(static_cast<size_t>(n), 0);
    for (const auto& t : mesh.triangles)
        for (int v : t) {
            if (v < 0 || v >= n) throw InvalidParams("mesh: triangle index out of range");
            in_triangle[static_cast<size_t>(v)] = 1;
        }
    if (!std::all_of(in_triangle.begin(), in_triangle.end(), [](char c) { return c != 0; }))
        throw InvalidParams("mesh: vertex not referenced by any triangle");

    // Edge connectivity over springs (union-find).
    std::vector<int> parent(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& s : mesh.springs) {
        if (s.i < 0 || s.i >= n || s.j < 0 || s.j >= n)
            throw InvalidParams("mesh: spring index out of range");
        parent[static_cast<size_t>(find(s.i))] = find(s.j);
        const double d = (mesh.vertices[static_cast<size_t>(s.i)] - mesh.vertices[static_cast<size_t>(s.j)]).norm();
        if (std::abs(d - s.rest_length) > 1e-9)
            throw InvalidParams("mesh: spring rest length does not match canonical distance");
    }
    const int root = find(0);
    for (int i = 1; i < n; ++i)
        if (find(i) != root) throw InvalidParams("mesh: not edge-connected");

    for (const auto& [name, idx] : mesh.keypoints)
        if (idx < 0 || idx >= n) throw InvalidParams("mesh: keypoint index out of range: " + name);
    if (mesh.category == GarmentCategory::Shirt) {
        for (const char* name : {"left_sleeve", "right_sleeve", "left_shoulder", "right_shoulder",
                                 "left_waist", "right_waist"})
            if (!mesh.keypoints.count(name))
                throw InvalidParams(std::string("mesh: shirt keypoint missing: ") + name);
    }
}

std::string serialize_mesh(const GarmentMesh& mesh) {
    std::ostringstream out;
    out << "clothfit-mesh v1\n";
    out << "category " << category_name(mesh.category) << "\n";
    out << "params " << mesh.params.size() << "\n";
    for (const auto& [k, v] : mesh.params) out << k << " " << format_double(v) << "\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    for (const auto& v : mesh.vertices)
        out << format_double(v.x()) << " " << format_double(v.y()) << " " << format_double(v.z()) << "\n";
    out << "triangles " << mesh.triangles.size() << "\n";
    for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "springs " << mesh.springs.size() << "\n";
    for (const auto& s : mesh.springs)
        out << s.i << " " << s.j << " " << format_double(s.rest_length) << " "
            << spring_kind_name(s.kind) << "\n";
    out << "keypoints " << mesh.keypoints.size() << "\n";
    for (const auto& [name, idx] : mesh.keypoints) out << name << " " << idx << "\n";
    return out.str();
}

namespace {

std::vector<std::string_view> expect_tokens(LineReader& r, size_t count, const char* what) {
    std::string_view line;
    if (!r.next(line)) throw ParseError(std::string("mesh: unexpected end of input reading ") + what);
    auto toks = split_ws(line);
    if (toks.size() != count)
        throw ParseError(std::string("mesh: malformed line for ") + what + ": " + std::string(line));
    return toks;
}

size_t expect_section(LineReader& r, const char* name) {
    auto toks = expect_tokens(r, 2, name);
    if (toks[0] != name) throw ParseError(std::string("mesh: expected section ") + name);
    return static_cast<size_t>(parse_int(toks[1]));
}

} // namespace

GarmentMesh parse_mesh(const std::string& text) {
    LineReader r(text);
    std::string_view line;
    if (!r.next(line) || line != "clothfit-mesh v1")
        throw ParseError("mesh: missing or unsupported header");

    GarmentMesh mesh;
    {
        auto toks = expect_tokens(r, 2, "category");
        if (toks[0] != "category") throw ParseError("mesh: expected category line");
        mesh.category = category_from_name(std::string(toks[1]));
    }
    const size_t n_params = expect_section(r, "params");
    for (size_t i = 0; i < n_params; ++i) {
        auto toks = expect_tokens(r, 2, "param");
        mesh.params.emplace_back(std::string(toks[0]), parse_double(toks[1]));
    }
    const size_t n_verts = expect_section(r, "vertices");
    mesh.vertices.reserve(n_verts);
    for (size_t i = 0; i < n_verts; ++i) {
        auto toks = expect_tokens(r, 3, "vertex");
        mesh.vertices.emplace_back(parse_double(toks[0]), parse_double(toks[1]), parse_double(toks[2]));
    }
    const size_t n_tris = expect_section(r, "triangles");
    mesh.triangles.reserve(n_tris);
    for (size_t i = 0; i < n_tris; ++i) {
        auto toks = expect_tokens(r, 3, "triangle");
        mesh.triangles.push_back({static_cast<int>(parse_int(toks[0])),
                                  static_cast<int>(parse_int(toks[1])),
                                  static_cast<int>(parse_int(toks[2]))});
    }
    const size_t n_springs = expect_section(r, "springs");
    mesh.springs.reserve(n_springs);
    for (size_t i = 0; i < n_springs; ++i) {
        auto toks = expect_tokens(r, 4, "spring");
        Spring s;
        s.i = static_cast<int>(parse_int(toks[0]));
        s.j = static_cast<int>(parse_int(toks[1]));
        s.rest_length = parse_double(toks[2]);
        s.kind = spring_kind_from_name(toks[3]);
        mesh.springs.push_back(s);
    }
    const size_t n_kp = expect_section(r, "keypoints");
    for (size_t i = 0; i < n_kp; ++i) {
        auto toks = expect_tokens(r, 2, "keypoint");
        mesh.keypoints[std::string(toks[0])] = static_cast<int>(parse_int(toks[1]));
    }
    return mesh;
}

void save_mesh(const GarmentMesh& mesh, const std::string& path) {
    write_file(path, serialize_mesh(mesh));
}

GarmentMesh load_mesh(const std::string& path) { return parse_mesh(read_file(path)); }

} // namespace clothfit
