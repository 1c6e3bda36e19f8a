#pragma once

#include "mesh.hpp"
#include "network.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bsrd {

/// Fields of one simulation plus running time integrals.
///
/// W and Z accumulate the time integrals of u and v; W_trace accumulates the
/// integral of the boundary trace of u. All three use end-of-step values.
struct SimState {
    double t = 0.0;
    std::vector<BulkField> u;
    std::vector<SurfaceField> v;
    std::vector<BulkField> W;
    std::vector<SurfaceField> W_trace;
    std::vector<SurfaceField> Z;
    std::int64_t step_count = 0;

    /// Mass added by the clip policy so far, per species (bulk then surface).
    std::vector<double> clipped;
    /// Incremental mass ledger per species (bulk then surface), updated from
    /// the reaction rates the step applied rather than from the fields.
    std::vector<double> ledger;

    static SimState initial(const PolarMesh& mesh, std::vector<BulkField> u0, std::vector<SurfaceField> v0)
    {
        SimState s;
        for (const auto& f : u0) detail::require_size(f.size(), mesh.num_cells(), "initial bulk field");
        for (const auto& g : v0) detail::require_size(g.size(), mesh.num_nodes(), "initial surface field");
        s.u = std::move(u0);
        s.v = std::move(v0);
        s.W.assign(s.u.size(), mesh.bulk_zeros());
        s.W_trace.assign(s.u.size(), mesh.surface_zeros());
        s.Z.assign(s.v.size(), mesh.surface_zeros());
        s.clipped.assign(s.u.size() + s.v.size(), 0.0);
        s.ledger.reserve(s.u.size() + s.v.size());
        for (const auto& f : s.u) {
            double m = 0.0;
            for (std::size_t c = 0; c < f.size(); ++c) m += f[c] * mesh.cell_areas()[c];
            s.ledger.push_back(m);
        }
        for (const auto& g : s.v) {
            double m = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) m += g[j] * mesh.boundary_arc_lengths()[j];
            s.ledger.push_back(m);
        }
        return s;
    }

    double total_clipped() const
    {
        double s = 0.0;
        for (double c : clipped) s += c;
        return s;
    }
};

} // namespace bsrd
