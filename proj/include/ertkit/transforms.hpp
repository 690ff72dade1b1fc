#ifndef ERTKIT_TRANSFORMS_HPP
#define ERTKIT_TRANSFORMS_HPP

#include <string>
#include <vector>

#include "ertkit/euler.hpp"
#include "ertkit/image.hpp"
#include "ertkit/lifted.hpp"

namespace ertkit {

enum class FieldKind { Ect, ErtFloor, ErtCeiling, ErtAvg, Sert };

const char* field_kind_name(FieldKind k);

// Real field over (direction, t). ECT entries are integers; SERT rows
// vanish at both endpoints.
struct TransformField {
    FieldKind kind = FieldKind::Ect;
    DirectionSet dirs;
    FiltrationGrid tgrid;
    std::vector<double> data;   // [p][q]
    std::string provenance;

    double at(int p, int q) const {
        return data[static_cast<std::size_t>(p) * tgrid.steps + q];
    }
    double& at(int p, int q) {
        return data[static_cast<std::size_t>(p) * tgrid.steps + q];
    }
    std::size_t size() const { return data.size(); }
};

// chi(K intersect half-space) for a binary image, swept incrementally in t.
TransformField compute_ect(const GrayscaleImage& K, const DirectionSet& dirs,
                           const FiltrationGrid& tgrid);

// ERT assembled from the SELECT/LECT fields of g and -g.
//
// QUANTIZED: the s-integration is exact over the attained cell values (the
// level grid only sets nothing here); LECT curves of quantized data carry no
// Lebesgue mass, so the three flavors coincide and the assembly reduces to
//   integral SELECT(g) ds - integral SELECT(-g) ds
// evaluated exactly. MULTILINEAR: left-endpoint rectangle rule with the
// level grid's spacing, applied to the positive ladder s = ds, 2ds, ...
// covering both g's and -g's positive ranges.
TransformField compute_ert(const GrayscaleImage& g, const DirectionSet& dirs,
                           const FiltrationGrid& tgrid, const LevelGrid& sgrid,
                           Model engine, Flavor flavor);

// One flavor value from the four s-integrals of the Lebesgue representation;
// used both internally and for fixtures whose LECT/SELECT curves are given
// analytically.
double assemble_ert_value(double int_select_g, double int_select_neg,
                          double int_lect_g, double int_lect_neg, Flavor flavor);

// Single-point multilinear ERT (rectangle rule with `levels` positive
// samples up to `smax`); used where a full field is overkill.
double ert_point_multilinear(const GrayscaleImage& g,
                             const std::array<double, 3>& nu, double t,
                             int levels, double smax, Flavor flavor);

// SERT(nu,t) = integral_0^t ERT - (t/T) integral_0^T ERT, trapezoid rule.
// Row endpoints are exactly zero.
TransformField compute_sert(const TransformField& ert);

// Forward finite differences of a SERT row, minus the t->0+ difference
// (zero for any image with a genuine support margin).
TransformField recover_ert_from_sert(const TransformField& sert);

// CSV columns dir_index,t,value; binary export mirrors the gimg framing
// with a kind tag.
void export_field_csv(const TransformField& f, const std::string& path);
void export_field_binary(const TransformField& f, const std::string& path);
TransformField load_field_binary(const std::string& path);

} // namespace ertkit

#endif
