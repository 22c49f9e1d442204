#pragma once

#include "facegen/mesh/connectivity.hpp"

namespace facegen {

/// out_v = mean of field over edge neighbours of v, minus field_v.
/// Throws IsolatedVertex when a vertex has no neighbours.
Points uniform_laplacian_apply(const MeshConnectivity& connectivity, const Points& field);

/// Transpose of uniform_laplacian_apply (the operator is not symmetric when
/// valences differ).
Points uniform_laplacian_apply_transpose(const MeshConnectivity& connectivity, const Points& field);

}  // namespace facegen
