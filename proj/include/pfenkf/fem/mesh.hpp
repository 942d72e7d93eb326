#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfenkf::fem {

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Point = std::array<double, 2>;

/// Zero-width slit realized by duplicated nodes. `lower[k]` and `upper[k]`
/// share coordinates; elements below the slit line reference `lower`,
/// elements above reference `upper`.
struct Slit {
    double y = 0.5;
    double x_begin = 0.0;
    double x_tip = 0.5;
    std::vector<int> lower;
    std::vector<int> upper;

    friend bool operator==(const Slit&, const Slit&) = default;
};

/// Axis-aligned box used to describe the refined band of the SENS mesh.
struct Region {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;

    [[nodiscard]] bool contains(const Point& p, double tol = 1e-12) const {
        return p[0] >= x_min - tol && p[0] <= x_max + tol && p[1] >= y_min - tol && p[1] <= y_max + tol;
    }
};

/// Linear line elements in 1D (2 nodes) or linear triangles in 2D (3 nodes).
/// Coordinates in mm; in 1D the second coordinate is always 0.
class Mesh {
public:
    Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
         std::map<std::string, std::vector<int>> boundary, std::optional<Slit> slit = std::nullopt);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int nodes_per_element() const { return dim_ + 1; }
    [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
    [[nodiscard]] std::size_t num_elements() const { return elements_.size(); }
    [[nodiscard]] const Point& node(std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
    [[nodiscard]] const std::array<int, 3>& element(std::size_t e) const { return elements_[e]; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& elements() const { return elements_; }
    [[nodiscard]] const std::map<std::string, std::vector<int>>& boundaries() const { return boundary_; }
    [[nodiscard]] const std::vector<int>& boundary(const std::string& name) const;
    [[nodiscard]] const std::optional<Slit>& slit() const { return slit_; }

    /// Signed measure (length or area) of element e.
    [[nodiscard]] double element_measure(std::size_t e) const;
    /// Largest side of the bounding box of element e (the grid spacing for
    /// the structured meshes built here).
    [[nodiscard]] double element_size(std::size_t e) const;
    [[nodiscard]] Point element_centroid(std::size_t e) const;

    /// Number of unknowns for the coupled problem: dim displacement
    /// components plus one micromorphic value per node.
    [[nodiscard]] std::size_t num_dofs() const { return num_nodes() * static_cast<std::size_t>(dim_ + 1); }

    friend bool operator==(const Mesh&, const Mesh&) = default;

private:
    void validate() const;

    int dim_;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 3>> elements_;
    std::map<std::string, std::vector<int>> boundary_;
    std::optional<Slit> slit_;
};

/// Uniform mesh of [x_min, x_max] with n_elems line elements.
Mesh build_mesh_1d(int n_elems, double x_min = -1.0, double x_max = 1.0);

/// 1D mesh on explicitly given, strictly increasing node coordinates.
Mesh build_mesh_1d_from_nodes(std::vector<double> xs);

/// Uniform 1D mesh with spacing (x_max-x_min)/n_elems whose interior nodes are
/// shifted by `offset_fraction` of a cell; the two boundary cells absorb the
/// shift. Used for ground-truth meshes that do not nest the ensemble mesh.
Mesh build_mesh_1d_offset(int n_elems, double offset_fraction, double x_min = -1.0, double x_max = 1.0);

struct SensMeshSettings {
    double h_coarse = 0.05;
    double h_fine = 0.015;
    Region refine_band{0.5, 1.0, 0.0, 0.6};
    double notch_length = 0.5;
    /// Flip the quad diagonal used to split cells into triangles.
    bool flip_diagonals = false;
};

/// Unit square with a horizontal slit from (0, 0.5) to (notch_length, 0.5).
/// Tensor-product grid graded from h_coarse to h_fine inside the refine band,
/// each cell split into two triangles.
Mesh build_mesh_sens(const SensMeshSettings& settings);

}  // namespace pfenkf::fem
