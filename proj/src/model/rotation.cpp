#include "facegen/model/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace facegen::model {

namespace {

Eigen::Matrix3d rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}
Eigen::Matrix3d rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}
Eigen::Matrix3d rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}
Eigen::Matrix3d drot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return r;
}
Eigen::Matrix3d drot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return r;
}
Eigen::Matrix3d drot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return r;
}

}  // namespace

Eigen::Matrix3d euler_xyz(const Eigen::Vector3d& a) { return rot_x(a.x()) * rot_y(a.y()) * rot_z(a.z()); }

std::array<Eigen::Matrix3d, 3> euler_xyz_derivatives(const Eigen::Vector3d& a) {
    const Eigen::Matrix3d rx = rot_x(a.x()), ry = rot_y(a.y()), rz = rot_z(a.z());
    return {drot_x(a.x()) * ry * rz, rx * drot_y(a.y()) * rz, rx * ry * drot_z(a.z())};
}

Eigen::Vector3d euler_xyz_angles(const Eigen::Matrix3d& r) {
    // R = Rx(a) Ry(b) Rz(c): R02 = sin b, R12 = -sin a cos b, R22 = cos a cos b,
    // R01 = -cos b sin c, R00 = cos b cos c.
    const double b = std::asin(std::clamp(r(0, 2), -1.0, 1.0));
    return {std::atan2(-r(1, 2), r(2, 2)), b, std::atan2(-r(0, 1), r(0, 0))};
}

}  // namespace facegen::model
