#ifndef ERTKIT_RADON_DUAL_HPP
#define ERTKIT_RADON_DUAL_HPP

#include <array>
#include <string>
#include <vector>

#include "ertkit/transforms.hpp"

namespace ertkit {

// Piecewise-constant function on the cylinder S^1 x [0,T]: every product
// cell takes the sample at its lower-left corner. Directions must be the
// uniform angle grid of make_direction_set(2, gamma).
struct CylinderField {
    int gamma = 0;
    FiltrationGrid tgrid;
    std::vector<double> data;   // [p][q]

    double at(int p, int q) const {
        return data[static_cast<std::size_t>(p) * tgrid.steps + q];
    }
    static CylinderField from_field(const TransformField& f);
};

// chi of {(nu,t) : x*nu + R <= t <= x'*nu + R}: 1 - (-1)^d on the diagonal
// (the graph is a sphere), 1 off it (a closed hemisphere). Asserts the
// Schapira identity (mu - lambda) * delta + lambda.
long long schapira_kernel_chi(const std::array<double, 3>& x,
                              const std::array<double, 3>& xp, int d, double R);

// Averaged Euler integral of h over {t <= x*nu + R} on the cylinder CW
// complex; exact for the piecewise-constant model. d = 2 only.
double dert(const CylinderField& h, const std::array<double, 3>& x);
std::vector<double> dert(const CylinderField& h,
                         const std::vector<std::array<double, 3>>& points);

// Slow reference evaluator: per-open-cell chi of the cell intersected with
// the band. Kept for cross-checking the sweep; identical results.
double dert_by_cells(const CylinderField& h, const std::array<double, 3>& x);

// Exact (DERT o ERT)(g)(x) for a quantized 2D image, with no cylinder grid:
// the quantized ERT is a finite sum of weighted indicator bands
//   sum_sigma w_sigma * 1{ t >= max_{v in cl(sigma)} v*nu + R },
// the averaged Euler integral is linear over such constructible summands,
// and each band chi is the chi_c of the polar arc of the cone spanned by
// {v - x}: 0 when x lies inside the convex hull of the cell's vertices,
// 1 otherwise (2 in the degenerate on-segment case).
double dert_ert_exact(const GrayscaleImage& g, const std::array<double, 3>& x);

// Value of the quantized cell model at a point (upper extension of the
// open cell containing it).
double image_value_at(const GrayscaleImage& g, const std::array<double, 3>& x);

struct InvertReport {
    std::vector<std::array<double, 3>> probes;
    std::vector<double> recovered;
    std::vector<double> truth;
    double boundary_limit = 0;
    double max_error = 0;

    std::string to_json() const;
};

// Desk-scale inversion round-trip: computes (-1)^(d+1) (DERT o ERT)(g),
// subtracts the boundary limit estimated on a ring outside the support,
// and compares with the image at the probes. d = 2, at most 4x4 cells and
// 3 intensity levels.
InvertReport invert_check(const GrayscaleImage& g, const DirectionSet& dirs,
                          const FiltrationGrid& tgrid,
                          const std::vector<std::array<double, 3>>& probes);

} // namespace ertkit

#endif
