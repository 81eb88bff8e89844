#pragma once

// Simplicial meshes on intervals and rectangles, P1 functions, quadrature.

#include <dphase/errors.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dphase {

/// Physical point. The second coordinate is unused (zero) in 1D.
using Point = std::array<double, 2>;

/// Per-element data of an affine simplex: measure and the constant
/// gradients of the barycentric (nodal basis) functions.
struct ElementGeometry {
    double measure = 0.0;
    std::array<Point, 3> basis_gradient{};
};

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

struct Rectangle {
    double a = 0.0;
    double b = 1.0;
    double c = 0.0;
    double d = 1.0;
};

class Mesh {
public:
    /// Validates the connectivity and precomputes element geometry and the
    /// interior numbering. `domain_measure` is the measure of the meshed region.
    Mesh(int dimension, std::vector<Point> vertices, std::vector<std::array<int, 3>> elements,
         std::vector<char> boundary_mask, double domain_measure)
        : dim_(dimension), vertices_(std::move(vertices)), elements_(std::move(elements)),
          boundary_(std::move(boundary_mask)), domain_measure_(domain_measure)
    {
        if (dim_ != 1 && dim_ != 2)
            throw InputError("mesh dimension must be 1 or 2");
        if (boundary_.size() != vertices_.size())
            throw InputError("boundary mask length differs from vertex count");
        const int nv = static_cast<int>(vertices_.size());
        geometry_.reserve(elements_.size());
        for (const auto& el : elements_) {
            for (int k = 0; k <= dim_; ++k)
                if (el[k] < 0 || el[k] >= nv)
                    throw InputError("element references an invalid vertex index");
            ElementGeometry g = dim_ == 1 ? segment_geometry(el) : triangle_geometry(el);
            if (!(g.measure > 0.0))
                throw InputError("element with non-positive measure");
            h_max_ = std::max(h_max_, diameter(el));
            geometry_.push_back(g);
        }
        interior_index_.assign(vertices_.size(), -1);
        for (int i = 0; i < nv; ++i) {
            if (!boundary_[i]) {
                interior_index_[i] = static_cast<int>(interior_.size());
                interior_.push_back(i);
            }
        }
    }

    int dimension() const noexcept { return dim_; }
    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_elements() const noexcept { return elements_.size(); }
    std::size_t num_interior() const noexcept { return interior_.size(); }

    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const std::array<int, 3>& element(std::size_t e) const { return elements_[e]; }
    const std::vector<std::array<int, 3>>& elements() const noexcept { return elements_; }
    const ElementGeometry& geometry(std::size_t e) const { return geometry_[e]; }
    bool on_boundary(std::size_t i) const { return boundary_[i] != 0; }
    const std::vector<char>& boundary_mask() const noexcept { return boundary_; }

    /// Index among interior vertices, or -1 for boundary vertices.
    int interior_index(std::size_t i) const { return interior_index_[i]; }
    const std::vector<int>& interior_vertices() const noexcept { return interior_; }

    /// Number of local vertices of an element (2 or 3).
    int nodes_per_element() const noexcept { return dim_ + 1; }
    double domain_measure() const noexcept { return domain_measure_; }
    /// Largest element diameter.
    double mesh_size() const noexcept { return h_max_; }

private:
    ElementGeometry segment_geometry(const std::array<int, 3>& el) const
    {
        const double x0 = vertices_[el[0]][0];
        const double x1 = vertices_[el[1]][0];
        ElementGeometry g;
        g.measure = x1 - x0;
        g.basis_gradient[0] = {-1.0 / g.measure, 0.0};
        g.basis_gradient[1] = {1.0 / g.measure, 0.0};
        return g;
    }

    ElementGeometry triangle_geometry(const std::array<int, 3>& el) const
    {
        const auto& [x0, y0] = vertices_[el[0]];
        const auto& [x1, y1] = vertices_[el[1]];
        const auto& [x2, y2] = vertices_[el[2]];
        const double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        ElementGeometry g;
        g.measure = 0.5 * det;
        g.basis_gradient[0] = {(y1 - y2) / det, (x2 - x1) / det};
        g.basis_gradient[1] = {(y2 - y0) / det, (x0 - x2) / det};
        g.basis_gradient[2] = {(y0 - y1) / det, (x1 - x0) / det};
        return g;
    }

    double diameter(const std::array<int, 3>& el) const
    {
        double d = 0.0;
        for (int i = 0; i <= dim_; ++i)
            for (int j = i + 1; j <= dim_; ++j)
                d = std::max(d, std::hypot(vertices_[el[i]][0] - vertices_[el[j]][0],
                                           vertices_[el[i]][1] - vertices_[el[j]][1]));
        return d;
    }

    int dim_;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> elements_;
    std::vector<char> boundary_;
    double domain_measure_;
    std::vector<ElementGeometry> geometry_;
    std::vector<int> interior_index_;
    std::vector<int> interior_;
    double h_max_ = 0.0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform mesh of [a,b] with `cells` segments.
inline MeshPtr build_mesh(Interval domain, int cells)
{
    if (cells < 1)
        throw InputError("resolution must be at least 1");
    if (!(domain.a < domain.b))
        throw InputError("degenerate interval: a < b required");
    std::vector<Point> verts(cells + 1);
    std::vector<char> boundary(cells + 1, 0);
    const double h = (domain.b - domain.a) / cells;
    for (int i = 0; i <= cells; ++i)
        verts[i] = {i == cells ? domain.b : domain.a + i * h, 0.0};
    boundary.front() = boundary.back() = 1;
    std::vector<std::array<int, 3>> elements(cells);
    for (int i = 0; i < cells; ++i)
        elements[i] = {i, i + 1, -1};
    return std::make_shared<const Mesh>(1, std::move(verts), std::move(elements),
                                        std::move(boundary), domain.b - domain.a);
}

/// Uniform mesh of [a,b]x[c,d]; each cell is split along its (lower-left,
/// upper-right) diagonal into two counter-clockwise triangles.
inline MeshPtr build_mesh(Rectangle domain, int nx, int ny)
{
    if (nx < 1 || ny < 1)
        throw InputError("resolution must be at least 1 in each direction");
    if (!(domain.a < domain.b) || !(domain.c < domain.d))
        throw InputError("degenerate rectangle: a < b and c < d required");
    const double hx = (domain.b - domain.a) / nx;
    const double hy = (domain.d - domain.c) / ny;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<Point> verts((nx + 1) * (ny + 1));
    std::vector<char> boundary(verts.size(), 0);
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            verts[id(i, j)] = {i == nx ? domain.b : domain.a + i * hx,
                               j == ny ? domain.d : domain.c + j * hy};
            boundary[id(i, j)] = (i == 0 || j == 0 || i == nx || j == ny) ? 1 : 0;
        }
    }
    std::vector<std::array<int, 3>> elements;
    elements.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return std::make_shared<const Mesh>(2, std::move(verts), std::move(elements), std::move(boundary),
                                        (domain.b - domain.a) * (domain.d - domain.c));
}

inline MeshPtr build_mesh(Rectangle domain, int cells) { return build_mesh(domain, cells, cells); }

/// Quadrature on the reference simplex, given in barycentric coordinates.
/// Weights sum to the reference measure (1 for [0,1], 1/2 for the unit triangle).
struct QuadratureRule {
    int dimension = 1;
    int degree = 2;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;

    double reference_measure() const { return dimension == 1 ? 1.0 : 0.5; }
};

/// Gauss-Legendre rule on [0,1] with 2, 3 or 4 points (degree 3, 5, 7).
inline QuadratureRule gauss_segment(int npoints)
{
    QuadratureRule q;
    q.dimension = 1;
    std::vector<double> xi, w;
    switch (npoints) {
    case 2: {
        const double a = 1.0 / std::sqrt(3.0);
        xi = {-a, a};
        w = {1.0, 1.0};
        break;
    }
    case 3: {
        const double a = std::sqrt(3.0 / 5.0);
        xi = {-a, 0.0, a};
        w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        break;
    }
    case 4: {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        xi = {-b, -a, a, b};
        w = {wb, wa, wa, wb};
        break;
    }
    default:
        throw InputError("gauss_segment supports 2, 3 or 4 points");
    }
    q.degree = 2 * npoints - 1;
    for (std::size_t k = 0; k < xi.size(); ++k) {
        const double t = 0.5 * (xi[k] + 1.0);
        q.points.push_back({1.0 - t, t, 0.0});
        q.weights.push_back(0.5 * w[k]);
    }
    return q;
}

/// Symmetric triangle rules of degree 2 (3 points) or 4 (6 points, Dunavant).
inline QuadratureRule triangle_rule(int degree)
{
    QuadratureRule q;
    q.dimension = 2;
    auto orbit = [&q](double a, double b, double w) {
        q.points.push_back({a, b, b});
        q.points.push_back({b, a, b});
        q.points.push_back({b, b, a});
        for (int k = 0; k < 3; ++k)
            q.weights.push_back(0.5 * w);
    };
    if (degree == 2) {
        q.degree = 2;
        orbit(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
    } else if (degree == 4) {
        q.degree = 4;
        orbit(0.108103018168070, 0.445948490915965, 0.223381589678011);
        orbit(0.816847572980459, 0.091576213509771, 0.109951743655322);
    } else {
        throw InputError("triangle_rule supports degree 2 or 4");
    }
    return q;
}

/// Default per-element rule: 3-point Gauss in 1D, degree-4 Dunavant in 2D.
inline QuadratureRule default_quadrature(int dimension)
{
    return dimension == 1 ? gauss_segment(3) : triangle_rule(4);
}

/// Physical location of a barycentric point on element `e`.
inline Point map_point(const Mesh& mesh, std::size_t e, const std::array<double, 3>& bary)
{
    const auto& el = mesh.element(e);
    Point x{0.0, 0.0};
    for (int k = 0; k < mesh.nodes_per_element(); ++k) {
        x[0] += bary[k] * mesh.vertex(el[k])[0];
        x[1] += bary[k] * mesh.vertex(el[k])[1];
    }
    return x;
}

/// Calls fn(x, weight, bary) for every quadrature point of element `e`;
/// `weight` already includes the element Jacobian.
template <class Fn>
void for_each_quadrature_point(const Mesh& mesh, const QuadratureRule& quad, std::size_t e, Fn&& fn)
{
    const double scale = mesh.geometry(e).measure / quad.reference_measure();
    for (std::size_t k = 0; k < quad.weights.size(); ++k)
        fn(map_point(mesh, e, quad.points[k]), quad.weights[k] * scale, quad.points[k]);
}

/// Sum over elements of the mapped quadrature of integrand(x, e).
/// Element contributions are reduced in element order.
template <class Integrand>
double integrate(const Mesh& mesh, const QuadratureRule& quad, Integrand&& integrand)
{
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        double local = 0.0;
        for_each_quadrature_point(mesh, quad, e, [&](const Point& x, double w, const auto&) {
            local += w * integrand(x, e);
        });
        total += local;
    }
    return total;
}

/// Continuous piecewise-linear function given by nodal values.
class FemFunction {
public:
    explicit FemFunction(MeshPtr mesh)
        : mesh_(std::move(mesh)), values_(mesh_->num_vertices(), 0.0) {}

    FemFunction(MeshPtr mesh, std::vector<double> values)
        : mesh_(std::move(mesh)), values_(std::move(values))
    {
        if (values_.size() != mesh_->num_vertices())
            throw InputError("nodal value count differs from vertex count");
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    /// True when every boundary vertex carries the value zero.
    bool dirichlet_conforming() const
    {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (mesh_->on_boundary(i) && values_[i] != 0.0)
                return false;
        return true;
    }

    /// Value at barycentric point `bary` of element `e`.
    double value_at(std::size_t e, const std::array<double, 3>& bary) const
    {
        const auto& el = mesh_->element(e);
        double v = 0.0;
        for (int k = 0; k < mesh_->nodes_per_element(); ++k)
            v += bary[k] * values_[el[k]];
        return v;
    }

    FemFunction scaled(double c) const
    {
        FemFunction r(mesh_, values_);
        for (double& v : r.values_)
            v *= c;
        return r;
    }

private:
    MeshPtr mesh_;
    std::vector<double> values_;
};

template <class Field>
FemFunction interpolate(const MeshPtr& mesh, Field&& field)
{
    std::vector<double> values(mesh->num_vertices());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = field(mesh->vertex(i));
    return FemFunction(mesh, std::move(values));
}

/// Constant gradient of u on element e (second component zero in 1D).
inline Point element_gradient(const FemFunction& u, std::size_t e)
{
    const Mesh& mesh = u.mesh();
    const auto& el = mesh.element(e);
    const auto& g = mesh.geometry(e);
    Point grad{0.0, 0.0};
    for (int k = 0; k < mesh.nodes_per_element(); ++k) {
        grad[0] += u[el[k]] * g.basis_gradient[k][0];
        grad[1] += u[el[k]] * g.basis_gradient[k][1];
    }
    return grad;
}

inline double norm(const Point& v) { return std::hypot(v[0], v[1]); }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }

/// ||u||_r^r by quadrature.
inline double lebesgue_power(const FemFunction& u, const QuadratureRule& quad, double r)
{
    const Mesh& mesh = u.mesh();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        double local = 0.0;
        for_each_quadrature_point(mesh, quad, e, [&](const Point&, double w, const auto& bary) {
            local += w * std::pow(std::abs(u.value_at(e, bary)), r);
        });
        total += local;
    }
    return total;
}

/// ||grad u||_r^r (exact for P1: the gradient is elementwise constant).
inline double gradient_power(const FemFunction& u, double r)
{
    const Mesh& mesh = u.mesh();
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        total += mesh.geometry(e).measure * std::pow(norm(element_gradient(u, e)), r);
    return total;
}

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("malformed number '" + std::string(s) + "'");
    return v;
}

} // namespace detail

/// CSV with columns x(,y),value; one row per vertex in mesh order.
/// Numbers use the shortest round-trip representation.
inline std::string to_csv(const FemFunction& u)
{
    const Mesh& mesh = u.mesh();
    std::string out = mesh.dimension() == 1 ? "x,value\n" : "x,y,value\n";
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        out += detail::format_double(mesh.vertex(i)[0]);
        out += ',';
        if (mesh.dimension() == 2) {
            out += detail::format_double(mesh.vertex(i)[1]);
            out += ',';
        }
        out += detail::format_double(u[i]);
        out += '\n';
    }
    return out;
}

/// Reads a CSV written by to_csv back onto `mesh`; coordinates must match.
inline FemFunction from_csv(const MeshPtr& mesh, const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw InputError("empty solution CSV");
    const std::size_t ncols = mesh->dimension() == 1 ? 2 : 3;
    std::vector<double> values;
    values.reserve(mesh->num_vertices());
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> cols;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            cols.push_back(detail::parse_double(std::string_view(line).substr(
                start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (cols.size() != ncols)
            throw InputError("solution CSV row has wrong column count");
        const std::size_t i = values.size();
        if (i >= mesh->num_vertices())
            throw InputError("solution CSV has more rows than mesh vertices");
        const Point& v = mesh->vertex(i);
        if (std::abs(cols[0] - v[0]) > 1e-12 || (ncols == 3 && std::abs(cols[1] - v[1]) > 1e-12))
            throw InputError("solution CSV coordinates do not match the mesh");
        values.push_back(cols.back());
    }
    if (values.size() != mesh->num_vertices())
        throw InputError("solution CSV has fewer rows than mesh vertices");
    return FemFunction(mesh, std::move(values));
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot open '" + path + "' for writing");
    out << text;
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace dphase
