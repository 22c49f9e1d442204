#include "facegen/mesh/normals.hpp"

#include <Eigen/Geometry>

namespace facegen {

namespace {

constexpr double kMinFaceNorm = 1e-15;

struct FaceFrame {
    Eigen::Vector3d d1, d2, cross;
    double norm = 0.0;
};

FaceFrame face_frame(const Points& p, const Quad& q) {
    FaceFrame f;
    f.d1 = (p.row(q[2]) - p.row(q[0])).transpose();
    f.d2 = (p.row(q[3]) - p.row(q[1])).transpose();
    f.cross = f.d1.cross(f.d2);
    f.norm = f.cross.norm();
    return f;
}

}  // namespace

NormalField vertex_normals(const QuadMesh& mesh) { return vertex_normals(mesh.vertices, mesh.quads); }

NormalField vertex_normals(const Points& positions, std::span<const Quad> quads) {
    NormalField out;
    out.normals = Points::Zero(positions.rows(), 3);
    for (std::size_t f = 0; f < quads.size(); ++f) {
        const FaceFrame frame = face_frame(positions, quads[f]);
        if (frame.norm < kMinFaceNorm) {
            out.zero_area_faces.push_back(static_cast<int>(f));
            continue;
        }
        const Eigen::RowVector3d n = (frame.cross / frame.norm).transpose();
        for (int v : quads[f]) out.normals.row(v) += n;
    }
    for (Eigen::Index v = 0; v < out.normals.rows(); ++v) {
        const double len = out.normals.row(v).norm();
        if (len > 0.0) out.normals.row(v) /= len;
    }
    return out;
}

Points vertex_normals_backward(const Points& positions, std::span<const Quad> quads, const Points& grad_normals) {
    const Eigen::Index nv = positions.rows();
    std::vector<FaceFrame> frames(quads.size());
    Points sums = Points::Zero(nv, 3);
    for (std::size_t f = 0; f < quads.size(); ++f) {
        frames[f] = face_frame(positions, quads[f]);
        if (frames[f].norm < kMinFaceNorm) continue;
        const Eigen::RowVector3d n = (frames[f].cross / frames[f].norm).transpose();
        for (int v : quads[f]) sums.row(v) += n;
    }

    // n = s / |s|  =>  dL/ds = (I - n n^T) g / |s|
    Points grad_sums = Points::Zero(nv, 3);
    for (Eigen::Index v = 0; v < nv; ++v) {
        const double len = sums.row(v).norm();
        if (len == 0.0) continue;
        const Eigen::Vector3d n = sums.row(v).transpose() / len;
        const Eigen::Vector3d g = grad_normals.row(v).transpose();
        grad_sums.row(v) = ((g - n * n.dot(g)) / len).transpose();
    }

    Points grad = Points::Zero(nv, 3);
    for (std::size_t f = 0; f < quads.size(); ++f) {
        const FaceFrame& fr = frames[f];
        if (fr.norm < kMinFaceNorm) continue;
        const Quad& q = quads[f];
        Eigen::Vector3d gf = Eigen::Vector3d::Zero();
        for (int v : q) gf += grad_sums.row(v).transpose();
        const Eigen::Vector3d fn = fr.cross / fr.norm;
        const Eigen::Vector3d gc = (gf - fn * fn.dot(gf)) / fr.norm;
        // c = d1 x d2
        const Eigen::Vector3d gd1 = fr.d2.cross(gc);
        const Eigen::Vector3d gd2 = gc.cross(fr.d1);
        grad.row(q[2]) += gd1.transpose();
        grad.row(q[0]) -= gd1.transpose();
        grad.row(q[3]) += gd2.transpose();
        grad.row(q[1]) -= gd2.transpose();
    }
    return grad;
}

}  // namespace facegen
