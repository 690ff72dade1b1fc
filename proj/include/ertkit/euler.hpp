#ifndef ERTKIT_EULER_HPP
#define ERTKIT_EULER_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "ertkit/image.hpp"

namespace ertkit {

enum class Flavor { Floor, Ceiling, Averaged };

const char* flavor_name(Flavor f);
Flavor flavor_from_name(const std::string& name);

// Cubical complex on the image lattice, addressed in doubled coordinates:
// coordinate c_k in [0, 2*n_k - 1), even = vertex plane, odd = interval.
// An open cell's dimension is the number of odd coordinates.
struct CubicalGrid {
    int d = 2;
    std::array<int, 3> vext{1, 1, 1};   // vertices per axis
    std::array<int, 3> cext{1, 1, 1};   // doubled extents, 2n-1 (1 beyond d)

    explicit CubicalGrid(const GrayscaleImage& img);
    CubicalGrid() = default;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(cext[0]) * cext[1] * cext[2];
    }
    std::size_t cell_index(int c0, int c1, int c2 = 0) const {
        return (static_cast<std::size_t>(c0) * cext[1] + c1) * cext[2] + c2;
    }
    static int cell_dim(int c0, int c1, int c2) {
        return (c0 & 1) + (c1 & 1) + (c2 & 1);
    }
};

// One real value per open cell of every dimension.
struct CellFunction {
    CubicalGrid grid;
    std::vector<double> value;

    double at(int c0, int c1, int c2 = 0) const {
        return value[grid.cell_index(c0, c1, c2)];
    }
};

// Upper-semicontinuous extension of vertex data: each top cell (voxel)
// carries the max of its corner values, lower cells inherit the max over
// incident top cells. Super-level sets of the result are closed
// subcomplexes. This is the QUANTIZED cell model.
CellFunction upper_extension(const GrayscaleImage& img);

// Min over closure vertices; the "all vertices above s" complexes of the
// MULTILINEAR super-level rule are its super-level sets.
CellFunction lower_extension(const GrayscaleImage& img);

enum class ValuePredicate { GreaterEqual, Greater, Equal, Bin };

// Selects cells by intensity and by the closed directional half-space
// x * nu <= t - R; a cell passes the half-space only when every vertex of
// its closure does (lower-star convention, right-continuous in t).
struct CellSelector {
    ValuePredicate pred = ValuePredicate::GreaterEqual;
    double s = 0;
    double bin_lo = 0, bin_hi = 0;     // used when pred == Bin: [lo, hi)
    std::array<double, 3> nu{1, 0, 0};
    double t = std::numeric_limits<double>::infinity();   // +inf: no cut

    static CellSelector super_level(double s) {
        CellSelector sel;
        sel.pred = ValuePredicate::GreaterEqual;
        sel.s = s;
        return sel;
    }
    static CellSelector level(double s) {
        CellSelector sel;
        sel.pred = ValuePredicate::Equal;
        sel.s = s;
        return sel;
    }
    CellSelector with_halfspace(std::array<double, 3> nu_, double t_) const {
        CellSelector sel = *this;
        sel.nu = nu_;
        sel.t = t_;
        return sel;
    }
};

// Combinatorial Euler characteristic of the selected set.
// QUANTIZED: alternating open-cell count over the upper extension.
// MULTILINEAR: ">= s" uses the all-vertices-above complex; "= s" uses the
// marching level mesh (V - E in 2D, V - E + F in 3D).
long long chi(const GrayscaleImage& img, const CellSelector& sel, Model engine);

// Sum over attained integer values n of n * chi({f = n}).
long long euler_integral_constructible(const CellFunction& f);

// Floor/ceiling/averaged Euler integral of a real-valued cell function via
// an exact sweep over the attained values (sweep_resolution caps nothing;
// the attained set is always finite and enumerated exactly).
double euler_integral_definable(const CellFunction& f, Flavor flavor,
                                int sweep_resolution = 0);

// --- Per-direction machinery shared by the transform modules -------------

// Precomputed per-cell data for directional sweeps over one image.
struct CellTable {
    CubicalGrid grid;
    std::vector<double> upper;      // upper extension (quantized value)
    std::vector<double> upper_neg;  // upper extension of the negated image
    std::vector<std::int8_t> sign;  // (-1)^dim
};

CellTable build_cell_table(const GrayscaleImage& img);

// Height of a cell = max over closure vertices of v * nu + R; fills the
// first filtration index q with t_q >= height, clamped to [0, steps]
// (steps meaning "never enters").
void cell_filtration_indices(const GrayscaleImage& img, const CubicalGrid& grid,
                             const std::array<double, 3>& nu,
                             const FiltrationGrid& tgrid,
                             std::vector<std::int32_t>& out);

} // namespace ertkit

#endif
