#pragma once

#include <vector>

#include <Eigen/Core>

#include "facegen/hair/groom.hpp"
#include "facegen/io/matrix_container.hpp"

namespace facegen::hair {

inline constexpr int kDefaultUvResolution = 64;
inline constexpr int kDefaultVolumeResolution = 32;

/// UV maps are indexed (row = v texel, column = u texel). Flow cells are rows
/// of `flow`, cell (ix, iy, iz) at row (iz * G + iy) * G + ix.
struct HairCode {
    int uv_resolution = 0;
    int volume_resolution = 0;
    Bbox bbox;
    Style style = Style::Scalp;
    ScalpCap scalp;
    Eigen::MatrixXd density;
    Eigen::MatrixXd length;
    Points flow;

    Eigen::Vector3d cell_size() const;
    int cell_index(int ix, int iy, int iz) const {
        return (iz * volume_resolution + iy) * volume_resolution + ix;
    }
    /// Throws InvalidParam when a map is negative or a flow cell is neither
    /// zero nor unit length within 1e-6.
    void validate() const;
};

/// `threads` only affects speed; the result is identical for any count.
HairCode encode_groom(const Groom& groom, int uv_resolution, int volume_resolution, const Bbox& bbox,
                      int threads = 1);

struct DecodedGroom {
    Groom groom;
    /// Strands that hit a zero-flow region or left the volume before using up
    /// their target length.
    std::vector<bool> terminated_early;
};

/// A quarter of the smallest cell side.
double default_step(const HairCode& code);

DecodedGroom decode_groom(const HairCode& code, int n_strands, double step, std::uint64_t seed, int threads = 1);

/// Trilinear interpolation of cell-centred flow vectors (not normalized).
Eigen::Vector3d sample_flow(const HairCode& code, const Eigen::Vector3d& p);

/// 2R^2 + 3G^3
std::size_t code_dimension(int uv_resolution, int volume_resolution);
/// Density (row-major), then length (row-major), then flow xyz-interleaved.
Eigen::VectorXd code_to_vector(const HairCode& code);
/// Flow cells with norm below 1e-6 become zero; others are re-normalized
/// unless already unit length to 1e-12.
HairCode vector_to_code(const Eigen::VectorXd& v, int uv_resolution, int volume_resolution, const Bbox& bbox,
                        Style style = Style::Scalp, const ScalpCap& scalp = {});

struct MapDeltas {
    /// ||a - b|| / ||a|| over each map (0 when both are zero).
    double density = 0.0;
    double length = 0.0;
};

MapDeltas map_deltas(const HairCode& reference, const HairCode& other);

/// For each reference strand, the tip distance to the other strand whose
/// root is nearest.
std::vector<double> endpoint_errors(const Groom& reference, const Groom& other);

io::MatrixContainer to_container(const HairCode& code);
HairCode hair_code_from_container(const io::MatrixContainer& container);

}  // namespace facegen::hair
