#include "ertkit/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ertkit {

const char* distance_family_name(DistanceFamily f) {
    switch (f) {
        case DistanceFamily::Ert: return "ert";
        case DistanceFamily::Sert: return "sert";
        case DistanceFamily::Select: return "select";
        default: return "mec";
    }
}

DistanceFamily distance_family_from_name(const std::string& name) {
    if (name == "ert") return DistanceFamily::Ert;
    if (name == "sert") return DistanceFamily::Sert;
    if (name == "select") return DistanceFamily::Select;
    if (name == "mec") return DistanceFamily::Mec;
    throw std::invalid_argument("unknown distance family: " + name);
}

namespace {

void check_exponent(double p) {
    if (std::isinf(p)) return;
    if (!(p >= 1.0)) throw std::invalid_argument("exponents must lie in [1, inf]");
}

inline double pow_p(double x, double p) {
    if (p == 2.0) return x * x;
    if (p == 1.0) return x;
    return std::pow(x, p);
}

inline double root_p(double x, double p) {
    if (p == 2.0) return std::sqrt(x);
    if (p == 1.0) return x;
    return std::pow(x, 1.0 / p);
}

bool same_grids(const DirectionSet& da, const FiltrationGrid& ta,
                const DirectionSet& db, const FiltrationGrid& tb) {
    if (da.d != db.d || da.count() != db.count()) return false;
    if (ta.steps != tb.steps || ta.T != tb.T) return false;
    for (int p = 0; p < da.count(); ++p)
        if (da.directions[p] != db.directions[p]) return false;
    return true;
}

} // namespace

double distance(const TransformField& a, const TransformField& b,
                const DistanceSpec& spec) {
    if (spec.family != DistanceFamily::Ert && spec.family != DistanceFamily::Sert)
        throw std::invalid_argument("field distance needs family ert or sert");
    check_exponent(spec.p);
    check_exponent(spec.q);
    if (!same_grids(a.dirs, a.tgrid, b.dirs, b.tgrid))
        throw std::invalid_argument("distance needs matching grids");
    bool pinf = std::isinf(spec.p), qinf = std::isinf(spec.q);
    double dt = a.tgrid.dt;
    double outer = 0;
    for (int p = 0; p < a.dirs.count(); ++p) {
        double inner = 0;
        for (int q = 0; q < a.tgrid.steps; ++q) {
            double d = std::abs(a.at(p, q) - b.at(p, q));
            if (pinf) inner = std::max(inner, d);
            else inner += pow_p(d, spec.p) * dt;
        }
        if (!pinf) inner = root_p(inner, spec.p);
        if (qinf) outer = std::max(outer, inner);
        else outer += pow_p(inner, spec.q) * a.dirs.weights[p];
    }
    return qinf ? outer : root_p(outer, spec.q);
}

double distance(const LiftedField& a, const LiftedField& b,
                const DistanceSpec& spec) {
    if (spec.family != DistanceFamily::Select)
        throw std::invalid_argument("lifted distance needs family select");
    check_exponent(spec.p);
    if (a.kind != LiftedKind::Select || b.kind != LiftedKind::Select)
        throw std::invalid_argument("select distance needs SELECT fields");
    if (!same_grids(a.dirs, a.tgrid, b.dirs, b.tgrid) ||
        a.sgrid.count() != b.sgrid.count() || a.sgrid.levels != b.sgrid.levels)
        throw std::invalid_argument("distance needs matching grids");
    double dt = a.tgrid.dt, ds = a.sgrid.ds;
    bool pinf = std::isinf(spec.p);
    double total = 0;
    int S = a.sgrid.count();
    for (int p = 0; p < a.dirs.count(); ++p) {
        double w = a.dirs.weights[p];
        for (int q = 0; q < a.tgrid.steps; ++q)
            for (int k = 0; k < S; ++k) {
                double d = std::abs(static_cast<double>(a.at(p, q, k)) - b.at(p, q, k));
                if (pinf) total = std::max(total, d);
                else total += pow_p(d, spec.p) * ds * dt * w;
            }
    }
    return pinf ? total : root_p(total, spec.p);
}

double distance(const MecField& a, const MecField& b, const DistanceSpec& spec) {
    if (spec.family != DistanceFamily::Mec)
        throw std::invalid_argument("mec distance needs family mec");
    check_exponent(spec.p);
    if (!same_grids(a.dirs, a.tgrid, b.dirs, b.tgrid))
        throw std::invalid_argument("distance needs matching grids");
    double dt = a.tgrid.dt;
    bool pinf = std::isinf(spec.p);
    double total = 0;
    for (int p = 0; p < a.dirs.count(); ++p)
        for (int q = 0; q < a.tgrid.steps; ++q) {
            double d = std::abs(a.at(p, q) - b.at(p, q));
            if (pinf) total = std::max(total, d);
            else total += pow_p(d, spec.p) * dt * a.dirs.weights[p];
        }
    return pinf ? total : root_p(total, spec.p);
}

} // namespace ertkit
