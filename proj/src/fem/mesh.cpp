#include "pfenkf/fem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace pfenkf::fem {

namespace {

constexpr double kCoordTol = 1e-12;

double cross2(const Point& a, const Point& b, const Point& c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

// Graded coordinates over [0, 1]: every breakpoint becomes a node, each
// segment is split uniformly with spacing no larger than the local target.
std::vector<double> graded_axis(std::vector<double> breaks, double band_min, double band_max, double h_fine,
                                double h_coarse) {
    breaks.push_back(0.0);
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return std::abs(a - b) < kCoordTol; }),
                 breaks.end());
    std::vector<double> xs{breaks.front()};
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double a = breaks[s];
        const double b = breaks[s + 1];
        if (b - a < kCoordTol) continue;
        const double mid = 0.5 * (a + b);
        const bool fine = mid >= band_min && mid <= band_max;
        const double h = fine ? h_fine : h_coarse;
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
        for (int k = 1; k < n; ++k) xs.push_back(a + (b - a) * k / n);
        xs.push_back(b);
    }
    return xs;
}

}  // namespace

Mesh::Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
           std::map<std::string, std::vector<int>> boundary, std::optional<Slit> slit)
    : dim_(dim),
      nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary)),
      slit_(std::move(slit)) {
    validate();
}

const std::vector<int>& Mesh::boundary(const std::string& name) const {
    auto it = boundary_.find(name);
    if (it == boundary_.end()) throw MeshError("unknown boundary set '" + name + "'");
    return it->second;
}

double Mesh::element_measure(std::size_t e) const {
    const auto& el = elements_[e];
    if (dim_ == 1) return nodes_[el[1]][0] - nodes_[el[0]][0];
    return 0.5 * cross2(nodes_[el[0]], nodes_[el[1]], nodes_[el[2]]);
}

double Mesh::element_size(std::size_t e) const {
    const auto& el = elements_[e];
    if (dim_ == 1) return std::abs(nodes_[el[1]][0] - nodes_[el[0]][0]);
    double xmin = std::numeric_limits<double>::max(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (int a = 0; a < 3; ++a) {
        const auto& p = nodes_[el[a]];
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    return std::max(xmax - xmin, ymax - ymin);
}

Point Mesh::element_centroid(std::size_t e) const {
    const auto& el = elements_[e];
    Point c{0.0, 0.0};
    const int npe = nodes_per_element();
    for (int a = 0; a < npe; ++a) {
        c[0] += nodes_[el[a]][0] / npe;
        c[1] += nodes_[el[a]][1] / npe;
    }
    return c;
}

void Mesh::validate() const {
    if (dim_ != 1 && dim_ != 2) throw MeshError("mesh dimension must be 1 or 2");
    if (nodes_.size() < 2) throw MeshError("mesh needs at least two nodes");
    const int npe = nodes_per_element();
    const int nn = static_cast<int>(nodes_.size());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        for (int a = 0; a < npe; ++a) {
            if (elements_[e][a] < 0 || elements_[e][a] >= nn)
                throw MeshError("element " + std::to_string(e) + " references invalid node");
        }
        if (!(element_measure(e) > 0.0))
            throw MeshError("element " + std::to_string(e) + " is degenerate or inverted");
    }

    double xmin = std::numeric_limits<double>::max(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : nodes_) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    auto check_set = [&](const std::string& name, int axis, double value) {
        auto it = boundary_.find(name);
        if (it == boundary_.end()) return;
        for (int n : it->second) {
            if (n < 0 || n >= nn) throw MeshError("boundary '" + name + "' references invalid node");
            if (std::abs(nodes_[n][axis] - value) > kCoordTol)
                throw MeshError("boundary '" + name + "' contains a node off the boundary");
        }
    };
    check_set("left", 0, xmin);
    check_set("right", 0, xmax);
    if (dim_ == 2) {
        check_set("bottom", 1, ymin);
        check_set("top", 1, ymax);
    }

    if (slit_) {
        if (dim_ != 2) throw MeshError("slit requires a 2D mesh");
        const auto& s = *slit_;
        if (s.lower.size() != s.upper.size() || s.lower.empty())
            throw MeshError("slit faces must pair up node for node");
        std::set<int> lower(s.lower.begin(), s.lower.end());
        std::set<int> upper(s.upper.begin(), s.upper.end());
        for (std::size_t k = 0; k < s.lower.size(); ++k) {
            const int lo = s.lower[k], up = s.upper[k];
            if (lo == up) throw MeshError("slit face nodes must be distinct DOF carriers");
            if (std::abs(nodes_[lo][0] - nodes_[up][0]) > kCoordTol ||
                std::abs(nodes_[lo][1] - nodes_[up][1]) > kCoordTol)
                throw MeshError("slit face nodes do not share coordinates");
            if (std::abs(nodes_[lo][1] - s.y) > kCoordTol) throw MeshError("slit node off the slit line");
        }
        for (std::size_t e = 0; e < elements_.size(); ++e) {
            bool has_lower = false, has_upper = false;
            for (int a = 0; a < 3; ++a) {
                has_lower = has_lower || lower.count(elements_[e][a]) > 0;
                has_upper = has_upper || upper.count(elements_[e][a]) > 0;
            }
            if (has_lower && has_upper)
                throw MeshError("element " + std::to_string(e) + " bridges the slit");
        }
    }
}

Mesh build_mesh_1d(int n_elems, double x_min, double x_max) {
    if (n_elems < 2) throw MeshError("1D mesh needs at least 2 elements");
    std::vector<double> xs(n_elems + 1);
    for (int i = 0; i <= n_elems; ++i) xs[i] = x_min + (x_max - x_min) * i / n_elems;
    xs.back() = x_max;
    return build_mesh_1d_from_nodes(std::move(xs));
}

Mesh build_mesh_1d_from_nodes(std::vector<double> xs) {
    if (xs.size() < 3) throw MeshError("1D mesh needs at least 2 elements");
    std::vector<Point> nodes;
    nodes.reserve(xs.size());
    for (double x : xs) nodes.push_back({x, 0.0});
    std::vector<std::array<int, 3>> elements;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        elements.push_back({static_cast<int>(i), static_cast<int>(i + 1), -1});
    std::map<std::string, std::vector<int>> boundary{{"left", {0}},
                                                     {"right", {static_cast<int>(xs.size()) - 1}}};
    return Mesh(1, std::move(nodes), std::move(elements), std::move(boundary));
}

Mesh build_mesh_1d_offset(int n_elems, double offset_fraction, double x_min, double x_max) {
    if (n_elems < 2) throw MeshError("1D mesh needs at least 2 elements");
    if (!(offset_fraction > 0.0 && offset_fraction < 1.0))
        throw MeshError("offset fraction must lie in (0, 1)");
    const double h = (x_max - x_min) / n_elems;
    std::vector<double> xs{x_min};
    for (int i = 0; i < n_elems; ++i) xs.push_back(x_min + (i + offset_fraction) * h);
    xs.push_back(x_max);
    return build_mesh_1d_from_nodes(std::move(xs));
}

Mesh build_mesh_sens(const SensMeshSettings& s) {
    if (!(s.h_fine > 0.0) || !(s.h_coarse > 0.0)) throw MeshError("mesh sizes must be positive");
    if (s.h_fine > s.h_coarse) throw MeshError("h_fine must not exceed h_coarse");
    if (!(s.notch_length > 0.0 && s.notch_length < 1.0)) throw MeshError("notch length must lie in (0, 1)");
    const double slit_y = 0.5;
    const Region& band = s.refine_band;

    const auto xs = graded_axis({band.x_min, band.x_max, s.notch_length}, band.x_min, band.x_max, s.h_fine,
                                s.h_coarse);
    const auto ys = graded_axis({band.y_min, band.y_max, slit_y}, band.y_min, band.y_max, s.h_fine, s.h_coarse);
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());
    int j_slit = -1;
    for (int j = 0; j < ny; ++j)
        if (std::abs(ys[j] - slit_y) < kCoordTol) j_slit = j;
    if (j_slit < 0) throw MeshError("slit line is not a grid line");

    std::vector<Point> nodes;
    std::vector<int> grid(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            grid[j * nx + i] = static_cast<int>(nodes.size());
            nodes.push_back({xs[i], ys[j]});
        }

    Slit slit;
    slit.y = slit_y;
    slit.x_begin = 0.0;
    slit.x_tip = s.notch_length;
    std::vector<int> upper_of(nodes.size(), -1);
    for (int i = 0; i < nx; ++i) {
        if (xs[i] < s.notch_length - kCoordTol) {
            const int lo = grid[j_slit * nx + i];
            const int up = static_cast<int>(nodes.size());
            nodes.push_back(nodes[lo]);
            upper_of[lo] = up;
            slit.lower.push_back(lo);
            slit.upper.push_back(up);
        }
    }

    std::vector<std::array<int, 3>> elements;
    for (int j = 0; j + 1 < ny; ++j) {
        const bool above_slit = (j == j_slit);
        for (int i = 0; i + 1 < nx; ++i) {
            auto id = [&](int ii, int jj) {
                const int n = grid[jj * nx + ii];
                if (above_slit && jj == j_slit && upper_of[n] >= 0) return upper_of[n];
                return n;
            };
            const int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
            // Alternate the diagonal in a checkerboard to avoid a directional bias.
            const bool flip = (((i + j) % 2) != 0) != s.flip_diagonals;
            if (!flip) {
                elements.push_back({n00, n10, n11});
                elements.push_back({n00, n11, n01});
            } else {
                elements.push_back({n00, n10, n01});
                elements.push_back({n10, n11, n01});
            }
        }
    }

    std::map<std::string, std::vector<int>> boundary;
    for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
        const auto& p = nodes[n];
        if (std::abs(p[0]) < kCoordTol) boundary["left"].push_back(n);
        if (std::abs(p[0] - 1.0) < kCoordTol) boundary["right"].push_back(n);
        if (std::abs(p[1]) < kCoordTol) boundary["bottom"].push_back(n);
        if (std::abs(p[1] - 1.0) < kCoordTol) boundary["top"].push_back(n);
    }
    return Mesh(2, std::move(nodes), std::move(elements), std::move(boundary), std::move(slit));
}

}  // namespace pfenkf::fem
