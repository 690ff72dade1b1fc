#include "ertkit/radon_dual.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "ertkit/euler.hpp"
#include "ertkit/parallel.hpp"

namespace ertkit {

using nlohmann::json;

CylinderField CylinderField::from_field(const TransformField& f) {
    if (f.dirs.d != 2)
        throw std::invalid_argument("cylinder fields are two-dimensional");
    CylinderField c;
    c.gamma = f.dirs.count();
    c.tgrid = f.tgrid;
    c.data = f.data;
    return c;
}

long long schapira_kernel_chi(const std::array<double, 3>& x,
                              const std::array<double, 3>& xp, int d, double R) {
    auto norm = [](const std::array<double, 3>& v) {
        return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    };
    if (!(norm(x) < R && norm(xp) < R))
        throw std::invalid_argument("kernel points must lie inside the ball");
    if (d != 2 && d != 3) throw std::invalid_argument("dimension must be 2 or 3");

    long long mu = 1 - (d % 2 == 0 ? 1 : -1);   // chi of S^{d-1}
    long long lambda = 1;
    long long result;
    if (x == xp) {
        // the band collapses to the graph of nu -> x*nu + R, a sphere
        result = mu;
    } else {
        // {nu : (xp - x)*nu >= 0} is a closed hemisphere; every fiber is a
        // closed interval (or a point on the equator), so chi = 1
        result = 1;
    }
    long long formula = (mu - lambda) * (x == xp ? 1 : 0) + lambda;
    assert(result == formula);
    (void)formula;
    return result;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Junction {
    double theta;
    int type;   // 0 = column line, 1 = up-crossing, 2 = down-crossing
};

double wrap(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0 ? a + kTwoPi : a;
}

} // namespace

// Exact averaged Euler integral of the piecewise-constant cylinder function
// over the band {t <= c(theta)}, c(theta) = r cos(theta - phi) + R.
//
// Grouping the open cells into half-open boxes and applying the chi_c
// Fubini formula leaves one term per (column, t-bin) pair:
//     sum e[p][q] * chi_c({theta in column p : bin(c(theta)) = q}).
// Those sets split at column lines and at crossings of c with the t grid;
// a piece is closed on the left when it starts at a column line or an
// up-crossing, closed on the right when it ends at a down-crossing, and
// chi_c is +1 / -1 / 0 for closed-closed / open-open / mixed pieces.
double dert(const CylinderField& h, const std::array<double, 3>& x) {
    int gamma = h.gamma;
    int steps = h.tgrid.steps;
    double dt = h.tgrid.dt;
    double R = h.tgrid.T / 2.0;
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
    if (!(r < R)) throw std::invalid_argument("dert point must lie inside the ball");
    if (r == 0) return 0.0;
    double phi = std::atan2(x[1], x[0]);

    std::vector<Junction> js;
    js.reserve(gamma + 2 * steps);
    double step = kTwoPi / gamma;
    for (int p = 0; p < gamma; ++p) js.push_back({p * step, 0});
    for (int q = 1; q < steps; ++q) {
        double u = (q * dt - R) / r;
        if (u <= -1.0 || u >= 1.0) continue;   // no crossing (tangencies skipped)
        double a = std::acos(u);
        js.push_back({wrap(phi + a), 2});   // c decreasing: down
        js.push_back({wrap(phi - a), 1});   // c increasing: up
    }
    std::sort(js.begin(), js.end(),
              [](const Junction& a, const Junction& b) { return a.theta < b.theta; });

    std::size_t m = js.size();
    double total = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Junction& left = js[i];
        const Junction& right = js[(i + 1) % m];
        double width = right.theta - left.theta;
        if (i + 1 == m) width += kTwoPi;
        if (width <= 0) continue;
        double mid = left.theta + width / 2.0;

        int chi;
        bool lclosed = left.type != 2;
        bool rclosed = right.type == 2;
        if (lclosed && rclosed) chi = 1;
        else if (!lclosed && !rclosed) chi = -1;
        else continue;

        double c = r * std::cos(mid - phi) + R;
        int bin = static_cast<int>(std::floor(c / dt));
        bin = std::clamp(bin, 0, steps - 1);
        int col = static_cast<int>(std::floor(wrap(mid) / step)) % gamma;
        total += chi * h.at(col, bin);
    }
    return total;
}

std::vector<double> dert(const CylinderField& h,
                         const std::vector<std::array<double, 3>>& points) {
    std::vector<double> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) { out[i] = dert(h, points[i]); });
    return out;
}

// ---------------------------------------------------------------------------
// Slow per-cell reference
// ---------------------------------------------------------------------------

namespace {

// chi_c of {theta in (a,b) : c(theta) >= tau} for c = r cos(theta-phi) + R.
// Interval ends are open; crossing points belong to the set.
long long chi_super_on_arc(double a, double b, double r, double phi, double R,
                           double tau) {
    double u = (tau - R) / r;
    std::vector<double> roots;
    if (u > -1.0 && u < 1.0) {
        double d0 = std::acos(u);
        for (double cand : {phi + d0, phi - d0}) {
            double w = wrap(cand);
            // shift into (a, a + 2pi)
            double t = a + wrap(w - a);
            if (t > a && t < b) roots.push_back(t);
        }
    }
    std::sort(roots.begin(), roots.end());

    auto value_at = [&](double th) { return r * std::cos(th - phi) + R - tau; };
    long long chi = 0;
    std::vector<double> pts;
    pts.push_back(a);
    for (double t : roots) pts.push_back(t);
    pts.push_back(b);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double mid = 0.5 * (pts[i] + pts[i + 1]);
        if (value_at(mid) < 0) continue;
        bool lclosed = i > 0;                   // interior root included
        bool rclosed = i + 2 < pts.size();
        if (lclosed && rclosed) chi += 1;
        else if (!lclosed && !rclosed) chi -= 1;
    }
    // isolated tangency points inside would need separate handling; the
    // caller avoids exact tangencies
    return chi;
}

} // namespace

double dert_by_cells(const CylinderField& h, const std::array<double, 3>& x) {
    int gamma = h.gamma;
    int steps = h.tgrid.steps;
    double dt = h.tgrid.dt;
    double R = h.tgrid.T / 2.0;
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
    if (!(r < R)) throw std::invalid_argument("dert point must lie inside the ball");
    double phi = r == 0 ? 0.0 : std::atan2(x[1], x[0]);
    double step = kTwoPi / gamma;

    auto c_of = [&](double th) { return r * std::cos(th - phi) + R; };
    double total = 0;
    for (int p = 0; p < gamma; ++p) {
        double th0 = p * step, th1 = (p + 1) * step;
        for (int q = 0; q < steps; ++q) {
            double tau0 = q * dt;
            double e = h.at(p, q);
            // vertex (th0, tau0)
            if (tau0 <= c_of(th0)) total += e;
            // t-edge {th0} x (tau0, tau1)
            if (q + 1 < steps) {
                double tau1 = tau0 + dt;
                if (c_of(th0) >= tau1) total -= e;
            }
            // theta-edge (th0, th1) x {tau0}: chi_super_on_arc already counts
            // the chi_c of the surviving sub-arcs
            if (r == 0) {
                if (R >= tau0) total -= e;   // whole open arc, chi_c = -1
            } else {
                total += e * chi_super_on_arc(th0, th1, r, phi, R, tau0);
            }
            // quad (th0, th1) x (tau0, tau1): fibers are fully covered where
            // c >= tau1 (chi_c = -1), half-open otherwise (chi_c = 0)
            if (q + 1 < steps) {
                double tau1 = tau0 + dt;
                if (r == 0) {
                    if (R >= tau1) total += e;   // whole open quad, chi_c = +1
                } else {
                    total -= e * chi_super_on_arc(th0, th1, r, phi, R, tau1);
                }
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Inversion round-trip
// ---------------------------------------------------------------------------

namespace {

// chi_c of {nu in S^1 : (v - x) * nu <= 0 for every cell vertex v}: the
// polar arc of the direction cone of {v - x}.
long long band_chi(const std::vector<std::array<double, 2>>& dirs_vx) {
    std::vector<double> ang;
    for (const auto& u : dirs_vx) {
        if (u[0] == 0 && u[1] == 0) continue;   // x equals this vertex
        ang.push_back(std::atan2(u[1], u[0]));
    }
    if (ang.empty()) return 0;   // the band is the graph over S^1, chi 0
    std::sort(ang.begin(), ang.end());
    double gap = kTwoPi - (ang.back() - ang.front());
    for (std::size_t i = 0; i + 1 < ang.size(); ++i)
        gap = std::max(gap, ang[i + 1] - ang[i]);
    double width = kTwoPi - gap;   // width of the direction cone
    const double eps = 1e-12;
    if (width > M_PI + eps) return 0;   // x inside the convex hull
    if (width < M_PI - eps) return 1;   // polar is a closed arc (or point)
    // spread exactly pi: a filled half-plane still gives a point (chi 1);
    // two antipodal rays give the two poles (chi 2)
    bool filled = false;
    for (std::size_t i = 0; i + 1 < ang.size() && !filled; ++i)
        if (ang[i + 1] - ang[i] > eps && ang[i + 1] - ang[i] < M_PI - eps)
            filled = true;
    return filled ? 1 : 2;
}

} // namespace

double dert_ert_exact(const GrayscaleImage& g, const std::array<double, 3>& x) {
    if (g.d != 2) throw std::invalid_argument("dert_ert_exact supports d = 2 only");
    double r = std::hypot(x[0], x[1]);
    if (!(r < g.radius)) throw std::invalid_argument("point must lie inside the ball");
    CellTable table = build_cell_table(g);
    double total = 0;
    std::size_t idx = 0;
    for (int c0 = 0; c0 < table.grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < table.grid.cext[1]; ++c1, ++idx) {
            double w = 0;
            if (table.upper[idx] > 0) w += table.upper[idx];
            if (table.upper_neg[idx] > 0) w -= table.upper_neg[idx];
            if (w == 0) continue;
            w *= table.sign[idx];
            std::vector<std::array<double, 2>> dirs_vx;
            for (int i = c0 / 2; i <= (c0 + 1) / 2; ++i)
                for (int j = c1 / 2; j <= (c1 + 1) / 2; ++j) {
                    auto p = g.vertex_position(i, j);
                    dirs_vx.push_back({p[0] - x[0], p[1] - x[1]});
                }
            total += w * band_chi(dirs_vx);
        }
    return total;
}

double image_value_at(const GrayscaleImage& g, const std::array<double, 3>& x) {
    CellTable table = build_cell_table(g);
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < g.d; ++a) {
        double u = (x[a] - g.origin[a]) / g.spacing[a];
        if (u < 0 || u > g.extents[a] - 1) return 0.0;
        int lo = static_cast<int>(std::floor(u));
        if (lo >= g.extents[a] - 1) lo = g.extents[a] - 2;
        // doubled coordinate: even on a vertex plane, odd inside
        c[a] = (u == static_cast<double>(lo)) ? 2 * lo : 2 * lo + 1;
    }
    std::size_t idx = table.grid.cell_index(c[0], c[1], c[2]);
    // the realized function: positive parts of the upper extensions of g, -g
    return std::max(table.upper[idx], 0.0) - std::max(table.upper_neg[idx], 0.0);
}

std::string InvertReport::to_json() const {
    json j;
    json p = json::array();
    for (std::size_t i = 0; i < probes.size(); ++i)
        p.push_back({{"x", probes[i][0]},
                     {"y", probes[i][1]},
                     {"recovered", recovered[i]},
                     {"truth", truth[i]}});
    j["probes"] = p;
    j["boundary_limit"] = boundary_limit;
    j["max_error"] = max_error;
    return j.dump();
}

InvertReport invert_check(const GrayscaleImage& g, const DirectionSet& dirs,
                          const FiltrationGrid& tgrid,
                          const std::vector<std::array<double, 3>>& probes) {
    validate_image(g);
    if (g.d != 2) throw std::invalid_argument("invert_check supports d = 2 only");
    if (g.model != Model::Quantized)
        throw std::invalid_argument("invert_check needs the quantized model");
    if (g.extents[0] > 5 || g.extents[1] > 5)
        throw std::invalid_argument("invert_check is desk-scale: at most 4x4 cells");
    std::set<double> levels(g.values.begin(), g.values.end());
    levels.erase(0.0);
    if (levels.size() > 3)
        throw std::invalid_argument("invert_check is desk-scale: at most 3 levels");

    if (dirs.d != 2 || dirs.count() < 4 || tgrid.steps < 2)
        throw std::invalid_argument("invert_check needs valid 2D grids");

    // The composition is evaluated exactly over the band decomposition of
    // the quantized ERT. Promoting ERT samples onto the (dirs, tgrid)
    // cylinder grid and integrating the staircase does not converge (Euler
    // integration is not continuous under staircase perturbation).
    // d = 2: 1/(mu - lambda) = -1
    auto c_of = [&](const std::array<double, 3>& x) { return -dert_ert_exact(g, x); };

    // Boundary limit from a ring outside the support margin.
    double maxsupp = 0;
    for (int i = 0; i < g.extents[0]; ++i)
        for (int j = 0; j < g.extents[1]; ++j)
            if (g.at(i, j) != 0) {
                auto p = g.vertex_position(i, j);
                maxsupp = std::max(maxsupp, std::hypot(p[0], p[1]));
            }
    double ring = 0.5 * (maxsupp + g.cell_diagonal() + g.radius);
    double limit = 0;
    const int ring_probes = 8;
    for (int k = 0; k < ring_probes; ++k) {
        double a = kTwoPi * (k + 0.37) / ring_probes;
        limit += c_of({ring * std::cos(a), ring * std::sin(a), 0});
    }
    limit /= ring_probes;

    InvertReport rep;
    rep.probes = probes;
    rep.boundary_limit = limit;
    rep.recovered.resize(probes.size());
    rep.truth.resize(probes.size());
    parallel_for(probes.size(), [&](std::size_t i) {
        rep.recovered[i] = c_of(probes[i]) - limit;
        rep.truth[i] = image_value_at(g, probes[i]);
    });
    for (std::size_t i = 0; i < probes.size(); ++i)
        rep.max_error = std::max(rep.max_error,
                                 std::abs(rep.recovered[i] - rep.truth[i]));
    return rep;
}

} // namespace ertkit
