/**
 * @file mesh.hpp
 * @brief Polar finite-volume mesh of a disk and its boundary circle.
 *
 * Cells are annular sectors indexed ring-major: cell (k, j) has flat index
 * k * Ntheta + j, with ring k = 0 touching the pole and ring Nr - 1 touching
 * the boundary. Boundary node j sits at the angular midpoint of the outer
 * face of cell (Nr - 1, j).
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsrd {

/// Concentration per bulk cell (amount / area).
struct BulkField {
    std::vector<double> values;

    BulkField() = default;
    explicit BulkField(std::size_t n, double fill = 0.0) : values(n, fill) {}
    explicit BulkField(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Concentration per boundary node (amount / length).
struct SurfaceField {
    std::vector<double> values;

    SurfaceField() = default;
    explicit SurfaceField(std::size_t n, double fill = 0.0) : values(n, fill) {}
    explicit SurfaceField(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

struct PolarPoint {
    double r;
    double theta;
};

class PolarMesh {
public:
    PolarMesh(double radius, int nr, int ntheta)
        : radius_(radius), nr_(nr), ntheta_(ntheta)
    {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw std::invalid_argument("polar mesh: radius must be positive and finite");
        if (nr < 2)
            throw std::invalid_argument("polar mesh: Nr must be at least 2");
        if (ntheta < 4 || ntheta % 2 != 0)
            throw std::invalid_argument("polar mesh: Ntheta must be even and at least 4");

        hr_ = radius / nr;
        htheta_ = 2.0 * std::numbers::pi / ntheta;

        const auto ncell = static_cast<std::size_t>(nr) * static_cast<std::size_t>(ntheta);
        centers_.reserve(ncell);
        areas_.reserve(ncell);
        for (int k = 0; k < nr; ++k) {
            const double r_in = k * hr_;
            const double r_out = (k + 1) * hr_;
            const double area = 0.5 * (r_out * r_out - r_in * r_in) * htheta_;
            for (int j = 0; j < ntheta; ++j) {
                centers_.push_back({0.5 * (r_in + r_out), (j + 0.5) * htheta_});
                areas_.push_back(area);
            }
        }

        nodes_.reserve(ntheta);
        arcs_.assign(ntheta, radius * htheta_);
        boundary_cell_.reserve(ntheta);
        for (int j = 0; j < ntheta; ++j) {
            nodes_.push_back((j + 0.5) * htheta_);
            boundary_cell_.push_back(cell_index(nr - 1, j));
        }
    }

    double radius() const { return radius_; }
    int nr() const { return nr_; }
    int ntheta() const { return ntheta_; }
    double hr() const { return hr_; }
    double htheta() const { return htheta_; }

    std::size_t num_cells() const { return areas_.size(); }
    std::size_t num_nodes() const { return nodes_.size(); }

    std::size_t cell_index(int k, int j) const
    {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(ntheta_)
            + static_cast<std::size_t>(j);
    }

    const std::vector<PolarPoint>& cell_centers() const { return centers_; }
    const std::vector<double>& cell_areas() const { return areas_; }
    const std::vector<double>& boundary_nodes() const { return nodes_; }
    const std::vector<double>& boundary_arc_lengths() const { return arcs_; }
    const std::vector<std::size_t>& boundary_cell_index() const { return boundary_cell_; }

    /// Radius of the face between ring k and ring k + 1 (k = -1 is the pole).
    double radial_face(int k) const { return (k + 1) * hr_; }

    /// Conductance of the radial face above ring k: face length / center spacing.
    double radial_conductance(int k) const { return radial_face(k) * htheta_ / hr_; }

    /// Conductance of the angular faces inside ring k.
    double angular_conductance(int k) const { return hr_ / (centers_[cell_index(k, 0)].r * htheta_); }

    /// |Omega| as the sum of cell areas.
    double area() const
    {
        double s = 0.0;
        for (double a : areas_) s += a;
        return s;
    }

    /// |M| as the sum of boundary arc lengths.
    double perimeter() const
    {
        double s = 0.0;
        for (double a : arcs_) s += a;
        return s;
    }

    BulkField bulk_zeros() const { return BulkField(num_cells()); }
    SurfaceField surface_zeros() const { return SurfaceField(num_nodes()); }

private:
    double radius_;
    int nr_;
    int ntheta_;
    double hr_ = 0.0;
    double htheta_ = 0.0;
    std::vector<PolarPoint> centers_;
    std::vector<double> areas_;
    std::vector<double> nodes_;
    std::vector<double> arcs_;
    std::vector<std::size_t> boundary_cell_;
};

inline PolarMesh build_polar_mesh(double radius, int nr, int ntheta)
{
    return PolarMesh(radius, nr, ntheta);
}

namespace detail {

inline void require_size(std::size_t got, std::size_t want, const char* what)
{
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(want)
                                    + " values, got " + std::to_string(got));
}

inline int wrap(int j, int n) { return (j % n + n) % n; }

} // namespace detail

/// Net diffusive exchange sum_faces conductance * (f_nb - f_c) for each cell,
/// not yet divided by cell area. Zero-flux on the outer boundary.
inline std::vector<double> bulk_face_exchange(const PolarMesh& mesh, const std::vector<double>& f)
{
    const int nr = mesh.nr();
    const int nt = mesh.ntheta();
    std::vector<double> out(f.size(), 0.0);
    for (int k = 0; k < nr; ++k) {
        const double ga = mesh.angular_conductance(k);
        const double g_out = k + 1 < nr ? mesh.radial_conductance(k) : 0.0;
        const double g_in = k > 0 ? mesh.radial_conductance(k - 1) : 0.0;
        for (int j = 0; j < nt; ++j) {
            const std::size_t c = mesh.cell_index(k, j);
            const double fc = f[c];
            double s = ga * (f[mesh.cell_index(k, detail::wrap(j + 1, nt))] - fc)
                + ga * (f[mesh.cell_index(k, detail::wrap(j - 1, nt))] - fc);
            if (k + 1 < nr) s += g_out * (f[mesh.cell_index(k + 1, j)] - fc);
            if (k > 0) s += g_in * (f[mesh.cell_index(k - 1, j)] - fc);
            out[c] = s;
        }
    }
    return out;
}

/// Finite-volume Laplacian with the outward flux density `flux` (already
/// d * du/dnu) injected into the outermost ring.
inline BulkField bulk_laplacian(const PolarMesh& mesh, const BulkField& f, const SurfaceField& flux)
{
    detail::require_size(f.size(), mesh.num_cells(), "bulk_laplacian field");
    detail::require_size(flux.size(), mesh.num_nodes(), "bulk_laplacian flux");

    auto ex = bulk_face_exchange(mesh, f.values);
    const auto& area = mesh.cell_areas();
    const auto& arc = mesh.boundary_arc_lengths();
    const auto& bcell = mesh.boundary_cell_index();
    for (std::size_t j = 0; j < mesh.num_nodes(); ++j) ex[bcell[j]] += flux[j] * arc[j];
    for (std::size_t c = 0; c < ex.size(); ++c) ex[c] /= area[c];
    return BulkField(std::move(ex));
}

/// Laplace-Beltrami operator on the boundary circle.
inline SurfaceField surface_laplacian(const PolarMesh& mesh, const SurfaceField& g)
{
    detail::require_size(g.size(), mesh.num_nodes(), "surface_laplacian field");
    const int n = mesh.ntheta();
    const double h = mesh.radius() * mesh.htheta();
    const double inv_h2 = 1.0 / (h * h);
    SurfaceField out(g.size());
    for (int j = 0; j < n; ++j) {
        const double gp = g[detail::wrap(j + 1, n)];
        const double gm = g[detail::wrap(j - 1, n)];
        out[j] = ((gp - g[j]) + (gm - g[j])) * inv_h2;
    }
    return out;
}

/// Piecewise-constant trace: the outermost-ring value adjacent to each node.
inline SurfaceField boundary_trace(const PolarMesh& mesh, const BulkField& f)
{
    detail::require_size(f.size(), mesh.num_cells(), "boundary_trace field");
    SurfaceField out(mesh.num_nodes());
    const auto& bcell = mesh.boundary_cell_index();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = f[bcell[j]];
    return out;
}

/// Samples a function of (r, theta) at cell centers.
template <class Fn>
BulkField sample_bulk(const PolarMesh& mesh, Fn&& fn)
{
    BulkField out(mesh.num_cells());
    const auto& c = mesh.cell_centers();
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = fn(c[i].r, c[i].theta);
    return out;
}

/// Samples a function of theta at boundary nodes.
template <class Fn>
SurfaceField sample_surface(const PolarMesh& mesh, Fn&& fn)
{
    SurfaceField out(mesh.num_nodes());
    const auto& th = mesh.boundary_nodes();
    for (std::size_t j = 0; j < th.size(); ++j) out[j] = fn(th[j]);
    return out;
}

} // namespace bsrd
