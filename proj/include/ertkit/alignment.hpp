#ifndef ERTKIT_ALIGNMENT_HPP
#define ERTKIT_ALIGNMENT_HPP

#include <array>
#include <vector>

#include "ertkit/transforms.hpp"

namespace ertkit {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& a);
std::array<double, 3> mat3_apply(const Mat3& a, const std::array<double, 3>& v);
bool mat3_is_orthogonal(const Mat3& a, double tol = 1e-10);
// Rotation by theta in the (x1,x3)-plane (about the x2 axis).
Mat3 rotation_xz(double theta);
// Rotation about the x3 axis; the O(2) action for planar images.
Mat3 rotation_xy(double theta);
Mat3 axis_angle(const std::array<double, 3>& axis, double angle);
// Geodesic angle between two rotations, in radians.
double rotation_distance(const Mat3& a, const Mat3& b);

// (A_* F)(nu, t) = F(A^{-1} nu, t), with A^{-1} nu resolved to the nearest
// direction of the field's grid.
TransformField rotate_field(const TransformField& F, const Mat3& A);

// Closed-form least-squares scale: argmin_l ||ref - l * rotated||_w.
// Returns 0 when `rotated` is the zero field.
double best_scale(const TransformField& ref, const TransformField& rotated);

struct AlignmentCandidate {
    Mat3 rotation;
    double scale;
    double objective;
};

// Transform carrying the reference field onto the source:
//   argmin_{A, lambda} || src - lambda * A_* ref ||_{L^2_nu L^2_t}.
// Aligning the source therefore applies the inverse.
struct AlignmentResult {
    Mat3 rotation = mat3_identity();
    double scale = 1.0;
    double objective = 0.0;
    std::vector<AlignmentCandidate> grid_trace;
};

// Coarse-to-fine search over O(d) (rotations plus the reflection coset)
// with the closed-form scale at every candidate. rotation_budget caps the
// number of coarse rotation evaluations.
AlignmentResult align(const TransformField& ref, const TransformField& src,
                      int rotation_budget);

// Objective samples || src - lambda * A(theta)_* ref || over a (theta,
// lambda) grid; A(theta) is rotation_xy for d=2 and rotation_xz for d=3.
std::vector<double> objective_surface(const TransformField& ref,
                                      const TransformField& src,
                                      const std::vector<double>& thetas,
                                      const std::vector<double>& lambdas);

} // namespace ertkit

#endif
