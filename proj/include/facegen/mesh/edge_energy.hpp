#pragma once

#include "facegen/mesh/connectivity.hpp"

namespace facegen {

struct EnergyWithGradient {
    double value = 0.0;
    Points gradient;
};

/// Sum over edges of (|e| - |e_ref|)^2 with its exact gradient.
EnergyWithGradient edge_length_energy(const QuadMesh& mesh, const QuadMesh& reference);
EnergyWithGradient edge_length_energy(const Points& positions, const Points& reference,
                                      const MeshConnectivity& connectivity);

}  // namespace facegen
