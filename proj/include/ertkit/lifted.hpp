#ifndef ERTKIT_LIFTED_HPP
#define ERTKIT_LIFTED_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ertkit/euler.hpp"
#include "ertkit/image.hpp"

namespace ertkit {

enum class LiftedKind { Lect, Select };

// Integer field over (direction, t, s): LECT(nu,t,s) = chi({g = s} within
// the half-space), SELECT(nu,t,s) = chi({g >= s} within the half-space).
struct LiftedField {
    LiftedKind kind = LiftedKind::Select;
    DirectionSet dirs;
    FiltrationGrid tgrid;
    LevelGrid sgrid;
    std::vector<std::int32_t> data;   // [p][q][k] C-ordered

    std::int32_t at(int p, int q, int k) const {
        return data[(static_cast<std::size_t>(p) * tgrid.steps + q) * sgrid.count() + k];
    }
    std::int32_t& at(int p, int q, int k) {
        return data[(static_cast<std::size_t>(p) * tgrid.steps + q) * sgrid.count() + k];
    }
};

LiftedField compute_lifted(const GrayscaleImage& g, LiftedKind kind,
                           const DirectionSet& dirs, const FiltrationGrid& tgrid,
                           const LevelGrid& sgrid, Model engine);

// Marginal Euler curve: rectangle-rule s-integral of SELECT over s > 0.
struct MecField {
    DirectionSet dirs;
    FiltrationGrid tgrid;
    std::vector<double> data;   // [p][q]

    double at(int p, int q) const {
        return data[static_cast<std::size_t>(p) * tgrid.steps + q];
    }
};

MecField compute_mec(const LiftedField& select);

// CSV columns dir_index,t,s,value; writes gzip when the path ends in ".gz".
void export_lifted_csv(const LiftedField& f, const std::string& path);

} // namespace ertkit

#endif
