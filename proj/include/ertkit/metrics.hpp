#ifndef ERTKIT_METRICS_HPP
#define ERTKIT_METRICS_HPP

#include <limits>
#include <string>

#include "ertkit/lifted.hpp"
#include "ertkit/transforms.hpp"

namespace ertkit {

enum class DistanceFamily { Ert, Sert, Select, Mec };

const char* distance_family_name(DistanceFamily f);
DistanceFamily distance_family_from_name(const std::string& name);

// ERT/SERT distances take the L^p norm in t then the L^q norm over
// directions (sphere-measure weights); SELECT and MEC use a single p.
// Infinite exponents mean exact maxima over grid nodes.
struct DistanceSpec {
    DistanceFamily family = DistanceFamily::Ert;
    double p = 2;
    double q = 2;

    static constexpr double inf = std::numeric_limits<double>::infinity();
};

double distance(const TransformField& a, const TransformField& b,
                const DistanceSpec& spec);
double distance(const LiftedField& a, const LiftedField& b,
                const DistanceSpec& spec);
double distance(const MecField& a, const MecField& b, const DistanceSpec& spec);

} // namespace ertkit

#endif
