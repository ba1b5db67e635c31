#pragma once

#include "capaf/capfun.hpp"
#include "capaf/grid.hpp"

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <vector>

namespace capaf {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Triangle = std::array<int, 3>;

/// The capillary surface of a body, one vertex per grid node. Triangles are
/// oriented so that their normals point along nu.
struct EmbeddedPatch {
    CapGrid grid;
    Points positions;
    Points normals; ///< nu = xi - cos(theta) e, unit length
    std::vector<Triangle> triangles;
    std::vector<Index> boundary;
};

/// X = grad h + h nu with nu = (sin rho cos phi, sin rho sin phi, cos rho).
EmbeddedPatch embed(const CapillaryBody& body);
EmbeddedPatch embed(const CapGrid& grid, const ScalarField& h);

/// max over the boundary ring of |<nu, e> + cos theta|, e = -E3.
double contact_angle_residual(const EmbeddedPatch& patch);

/// max over the boundary ring of |x3|.
double planarity_residual(const EmbeddedPatch& patch);

/// min of x3 over the vertices off the boundary ring.
double interior_min_height(const EmbeddedPatch& patch);

/// Triangles whose area is below 1e-14 times the mean triangle area.
std::vector<int> degenerate_triangles(const EmbeddedPatch& patch);

/// Volume enclosed by the patch and the plane x3 = 0: (1/3) sum over the
/// triangles of <centroid, area vector>. The flat bottom contributes nothing.
double enclosed_volume(const EmbeddedPatch& patch);

/// Largest angle (radians) between the area-weighted mesh normal at a vertex
/// and nu.
double vertex_normal_deviation(const EmbeddedPatch& patch);

/// Eigenvalues of A[h] per node, smaller first.
std::array<ScalarField, 2> principal_radii(const CapillaryBody& body);

/// Quermassintegral V_{k+1} from the surface and boundary-curve integrals,
/// (1/3) (int H_k dA - cos(theta) sin(theta)^k / 2 * int H_{k-1} ds), k in 1..2.
double boundary_form_quermass(const CapillaryBody& body, int k);

/// Length of the boundary curve and its total signed curvature.
struct BoundaryCurve {
    double length = 0.0;
    double total_curvature = 0.0;
};
BoundaryCurve boundary_curve(const EmbeddedPatch& patch);

struct ParallelBody {
    CapillaryBody body;
    double displacement_error = 0.0; ///< max |X_t - X - t xi|
    double linearity_error = 0.0;    ///< max |X_t - X - t X[l]|
};

/// The body with support h + t l and the pointwise check that its surface is
/// the parallel surface X + t (nu + cos(theta) e).
ParallelBody parallel_body(const CapillaryBody& body, double t);

/// ASCII OBJ with 17 significant digits.
std::string mesh_to_obj(const EmbeddedPatch& patch);
void export_mesh(const EmbeddedPatch& patch, const std::string& path);

struct MeshData {
    Points positions;
    Points normals;
    std::vector<Triangle> triangles;
};
MeshData import_mesh(const std::string& path);

/// Residuals and volumes of a reconstructed body.
nlohmann::json patch_summary(const CapillaryBody& body, const EmbeddedPatch& patch);

} // namespace capaf
