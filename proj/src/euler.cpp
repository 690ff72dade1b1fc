#include "ertkit/euler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <unordered_set>

namespace ertkit {

const char* flavor_name(Flavor f) {
    switch (f) {
        case Flavor::Floor: return "floor";
        case Flavor::Ceiling: return "ceiling";
        default: return "avg";
    }
}

Flavor flavor_from_name(const std::string& name) {
    if (name == "floor") return Flavor::Floor;
    if (name == "ceiling") return Flavor::Ceiling;
    if (name == "avg" || name == "averaged") return Flavor::Averaged;
    throw std::invalid_argument("unknown flavor: " + name);
}

CubicalGrid::CubicalGrid(const GrayscaleImage& img) {
    d = img.d;
    vext = img.extents;
    for (int a = 0; a < 3; ++a) cext[a] = a < d ? 2 * vext[a] - 1 : 1;
}

// ---------------------------------------------------------------------------
// Cell value extensions
// ---------------------------------------------------------------------------

namespace {

// Top-cell (voxel) values: max over the 2^d corner vertices.
std::vector<double> top_cell_values(const GrayscaleImage& img) {
    int d = img.d;
    std::array<int, 3> m{1, 1, 1};
    for (int a = 0; a < d; ++a) m[a] = img.extents[a] - 1;
    std::vector<double> top(static_cast<std::size_t>(m[0]) * m[1] * m[2]);
    for (int i = 0; i < m[0]; ++i)
        for (int j = 0; j < m[1]; ++j)
            for (int k = 0; k < m[2]; ++k) {
                double v = img.at(i, j, k);
                v = std::max(v, img.at(i + 1, j, k));
                v = std::max(v, img.at(i, j + 1, k));
                v = std::max(v, img.at(i + 1, j + 1, k));
                if (d == 3) {
                    v = std::max(v, img.at(i, j, k + 1));
                    v = std::max(v, img.at(i + 1, j, k + 1));
                    v = std::max(v, img.at(i, j + 1, k + 1));
                    v = std::max(v, img.at(i + 1, j + 1, k + 1));
                }
                top[(static_cast<std::size_t>(i) * m[1] + j) * m[2] + k] = v;
            }
    return top;
}

inline void top_range(int c, int m, int& lo, int& hi) {
    if (c & 1) {
        lo = hi = (c - 1) / 2;
    } else {
        lo = std::max(0, c / 2 - 1);
        hi = std::min(m - 1, c / 2);
    }
}

} // namespace

CellFunction upper_extension(const GrayscaleImage& img) {
    CellFunction f;
    f.grid = CubicalGrid(img);
    f.value.resize(f.grid.cell_count());
    auto top = top_cell_values(img);
    std::array<int, 3> m{1, 1, 1};
    for (int a = 0; a < img.d; ++a) m[a] = img.extents[a] - 1;

    std::size_t idx = 0;
    for (int c0 = 0; c0 < f.grid.cext[0]; ++c0) {
        int lo0, hi0;
        top_range(c0, m[0], lo0, hi0);
        for (int c1 = 0; c1 < f.grid.cext[1]; ++c1) {
            int lo1, hi1;
            top_range(c1, m[1], lo1, hi1);
            for (int c2 = 0; c2 < f.grid.cext[2]; ++c2, ++idx) {
                int lo2 = 0, hi2 = 0;
                if (img.d == 3) top_range(c2, m[2], lo2, hi2);
                double v = -std::numeric_limits<double>::infinity();
                for (int i = lo0; i <= hi0; ++i)
                    for (int j = lo1; j <= hi1; ++j)
                        for (int k = lo2; k <= hi2; ++k)
                            v = std::max(
                                v, top[(static_cast<std::size_t>(i) * m[1] + j) * m[2] + k]);
                f.value[idx] = v;
            }
        }
    }
    return f;
}

CellFunction lower_extension(const GrayscaleImage& img) {
    CellFunction f;
    f.grid = CubicalGrid(img);
    f.value.resize(f.grid.cell_count());
    std::size_t idx = 0;
    for (int c0 = 0; c0 < f.grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < f.grid.cext[1]; ++c1)
            for (int c2 = 0; c2 < f.grid.cext[2]; ++c2, ++idx) {
                double v = std::numeric_limits<double>::infinity();
                for (int i = c0 / 2; i <= (c0 + 1) / 2; ++i)
                    for (int j = c1 / 2; j <= (c1 + 1) / 2; ++j)
                        for (int k = c2 / 2; k <= (c2 + 1) / 2; ++k)
                            v = std::min(v, img.at(i, j, k));
                f.value[idx] = v;
            }
    return f;
}

// ---------------------------------------------------------------------------
// chi
// ---------------------------------------------------------------------------

namespace {

void check_selector(const CellSelector& sel) {
    if (std::isfinite(sel.t)) {
        double n2 = sel.nu[0] * sel.nu[0] + sel.nu[1] * sel.nu[1] + sel.nu[2] * sel.nu[2];
        if (std::abs(n2 - 1.0) > 1e-6)
            throw std::invalid_argument("selector direction must have unit norm");
    }
    if (sel.pred == ValuePredicate::Bin) {
        if (!std::isfinite(sel.bin_lo) || !std::isfinite(sel.bin_hi))
            throw std::invalid_argument("bin thresholds must be finite");
    } else if (!std::isfinite(sel.s)) {
        throw std::invalid_argument("selector threshold must be finite");
    }
}

inline bool value_selected(const CellSelector& sel, double v) {
    switch (sel.pred) {
        case ValuePredicate::GreaterEqual: return v >= sel.s;
        case ValuePredicate::Greater: return v > sel.s;
        case ValuePredicate::Equal: return v == sel.s;
        default: return v >= sel.bin_lo && v < sel.bin_hi;
    }
}

// Max over closure vertices of v * nu, plus R; cells pass when this is <= t.
// The per-axis maximizing vertex index is (c + (nu_a >= 0)) >> 1.
struct HeightTables {
    std::array<std::vector<double>, 3> dot;
    std::array<int, 3> pick;   // 1 if nu component >= 0

    HeightTables(const GrayscaleImage& img, const std::array<double, 3>& nu) {
        for (int a = 0; a < 3; ++a) {
            pick[a] = nu[a] >= 0 ? 1 : 0;
            dot[a].resize(img.extents[a]);
            for (int i = 0; i < img.extents[a]; ++i)
                dot[a][i] = (img.origin[a] + i * img.spacing[a]) * nu[a];
        }
    }
    double height(int c0, int c1, int c2) const {
        return dot[0][(c0 + pick[0]) >> 1] + dot[1][(c1 + pick[1]) >> 1] +
               dot[2][(c2 + pick[2]) >> 1];
    }
};

long long alternating_count(const GrayscaleImage& img, const CellFunction& f,
                            const CellSelector& sel) {
    bool cut = std::isfinite(sel.t);
    HeightTables ht(img, sel.nu);
    double cutoff = sel.t - img.radius;
    long long total = 0;
    std::size_t idx = 0;
    const auto& g = f.grid;
    for (int c0 = 0; c0 < g.cext[0]; ++c0)
        for (int c1 = 0; c1 < g.cext[1]; ++c1)
            for (int c2 = 0; c2 < g.cext[2]; ++c2, ++idx) {
                if (!value_selected(sel, f.value[idx])) continue;
                if (cut && ht.height(c0, c1, c2) > cutoff) continue;
                total += (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -1 : 1;
            }
    return total;
}

double nudged_level(const GrayscaleImage& img, double s) {
    bool attained = false;
    for (double v : img.values)
        if (v == s) {
            attained = true;
            break;
        }
    if (!attained) return s;
    double range = img.max_value() - img.min_value();
    if (range == 0) range = 1.0;
    return s + 1e-12 * range;
}

// Marching squares: chi(level set of the bilinear model) = V - E, with the
// asymptotic decider resolving the two diagonal configurations.
long long marching_chi_2d(const GrayscaleImage& img, double s,
                          const std::array<double, 3>& nu, double t) {
    s = nudged_level(img, s);
    bool cutting = std::isfinite(t);
    int n0 = img.extents[0], n1 = img.extents[1];
    double cutoff = t - img.radius;

    std::vector<char> pass(static_cast<std::size_t>(n0) * n1, 1);
    if (cutting) {
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j) {
                auto p = img.vertex_position(i, j);
                pass[img.index(i, j)] = (p[0] * nu[0] + p[1] * nu[1]) <= cutoff;
            }
    }
    auto f = [&](int i, int j) { return img.at(i, j) - s; };
    auto edge_kept = [&](int i0, int j0, int i1, int j1) {
        return pass[img.index(i0, j0)] && pass[img.index(i1, j1)];
    };
    auto crossing = [&](int i0, int j0, int i1, int j1) {
        return (f(i0, j0) > 0) != (f(i1, j1) > 0);
    };

    long long verts = 0;
    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j < n1; ++j)
            if (crossing(i, j, i + 1, j) && edge_kept(i, j, i + 1, j)) ++verts;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j + 1 < n1; ++j)
            if (crossing(i, j, i, j + 1) && edge_kept(i, j, i, j + 1)) ++verts;

    long long segs = 0;
    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j + 1 < n1; ++j) {
            double f00 = f(i, j), f10 = f(i + 1, j);
            double f01 = f(i, j + 1), f11 = f(i + 1, j + 1);
            int cfg = (f00 > 0) | ((f10 > 0) << 1) | ((f01 > 0) << 2) | ((f11 > 0) << 3);
            if (cfg == 0 || cfg == 15) continue;

            // Pixel edge keep flags. a: v00-v01, b: v10-v11, c: v00-v10, d: v01-v11.
            bool ka = edge_kept(i, j, i, j + 1), kb = edge_kept(i + 1, j, i + 1, j + 1);
            bool kc = edge_kept(i, j, i + 1, j), kd = edge_kept(i, j + 1, i + 1, j + 1);
            auto add = [&](bool e1, bool e2) {
                if (e1 && e2) ++segs;
            };
            switch (cfg) {
                case 1: case 14: add(ka, kc); break;   // corner v00
                case 2: case 13: add(kb, kc); break;   // corner v10
                case 4: case 11: add(ka, kd); break;   // corner v01
                case 8: case 7:  add(kb, kd); break;   // corner v11
                case 3: case 12: add(ka, kb); break;   // split along axis 1
                case 5: case 10: add(kc, kd); break;   // split along axis 0
                case 6: case 9: {
                    // Diagonal: saddle value of the bilinear patch decides
                    // which sign owns the center.
                    double denom = f00 + f11 - f10 - f01;
                    double saddle = (f00 * f11 - f10 * f01) / denom;
                    bool diag00 = (cfg == 9);   // v00 & v11 on the same side
                    bool center_with_00side = diag00 ? (saddle > 0) : (saddle < 0);
                    if (center_with_00side) {
                        add(kb, kc);   // around v10
                        add(ka, kd);   // around v01
                    } else {
                        add(ka, kc);   // around v00
                        add(kb, kd);   // around v11
                    }
                    break;
                }
            }
        }
    return verts - segs;
}

// Marching tetrahedra on the Kuhn 6-tet split: chi(level set) = V - E + F.
// Every cut lies on a segment between two lattice vertices, so mesh
// vertices are keyed by that vertex pair.
long long marching_chi_3d(const GrayscaleImage& img, double s,
                          const std::array<double, 3>& nu, double t) {
    s = nudged_level(img, s);
    bool cutting = std::isfinite(t);
    double cutoff = t - img.radius;
    int n0 = img.extents[0], n1 = img.extents[1], n2 = img.extents[2];

    std::vector<char> pass(img.vertex_count(), 1);
    if (cutting) {
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j)
                for (int k = 0; k < n2; ++k) {
                    auto p = img.vertex_position(i, j, k);
                    pass[img.index(i, j, k)] =
                        (p[0] * nu[0] + p[1] * nu[1] + p[2] * nu[2]) <= cutoff;
                }
    }

    // Tets share the main diagonal c000-c111; faces between neighboring
    // cubes carry matching diagonals.
    static const int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                     {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
            return std::hash<std::uint64_t>()(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
        }
    };
    std::unordered_set<std::uint64_t> vset;
    std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> eset;
    long long faces = 0;

    auto vkey = [&](std::uint64_t a, std::uint64_t b) {
        if (a > b) std::swap(a, b);
        return a * static_cast<std::uint64_t>(img.vertex_count()) + b;
    };

    std::array<std::uint64_t, 4> corner_id;
    std::array<double, 4> corner_f;
    std::array<char, 4> corner_pass;

    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j + 1 < n1; ++j)
            for (int k = 0; k + 1 < n2; ++k) {
                for (const auto& perm : kPerms) {
                    int ci = i, cj = j, ck = k;
                    auto note = [&](int slot) {
                        corner_id[slot] = img.index(ci, cj, ck);
                        corner_f[slot] = img.at(ci, cj, ck) - s;
                        corner_pass[slot] = pass[corner_id[slot]];
                    };
                    note(0);
                    for (int step = 0; step < 3; ++step) {
                        if (perm[step] == 0) ++ci;
                        else if (perm[step] == 1) ++cj;
                        else ++ck;
                        note(step + 1);
                    }

                    int cfg = 0;
                    for (int c = 0; c < 4; ++c)
                        if (corner_f[c] > 0) cfg |= 1 << c;
                    if (cfg == 0 || cfg == 15) continue;

                    // A mesh vertex survives the half-space cut when both
                    // lattice endpoints of its segment pass; edges and
                    // triangles survive when all their vertices do. Partially
                    // surviving elements contribute their surviving faces.
                    auto cut = [&](int a, int b) {
                        if (!(corner_pass[a] && corner_pass[b])) return std::uint64_t{0};
                        std::uint64_t key = vkey(corner_id[a], corner_id[b]) + 1;
                        vset.insert(key);
                        return key;
                    };
                    auto emit = [&](std::uint64_t a, std::uint64_t b, std::uint64_t c) {
                        auto ins = [&](std::uint64_t x, std::uint64_t y) {
                            if (!x || !y) return;
                            if (x > y) std::swap(x, y);
                            eset.insert({x, y});
                        };
                        ins(a, b);
                        ins(b, c);
                        ins(a, c);
                        if (a && b && c) ++faces;
                    };

                    int pos[4], neg[4], np = 0, nn = 0;
                    for (int c = 0; c < 4; ++c)
                        (corner_f[c] > 0 ? pos[np++] : neg[nn++]) = c;
                    if (np == 1 || nn == 1) {
                        int lone = np == 1 ? pos[0] : neg[0];
                        int others[3], no = 0;
                        for (int c = 0; c < 4; ++c)
                            if (c != lone) others[no++] = c;
                        emit(cut(lone, others[0]), cut(lone, others[1]),
                             cut(lone, others[2]));
                    } else {
                        // 2-2 split: quad over the four crossing edges.
                        std::uint64_t q0 = cut(pos[0], neg[0]);
                        std::uint64_t q1 = cut(pos[0], neg[1]);
                        std::uint64_t q2 = cut(pos[1], neg[1]);
                        std::uint64_t q3 = cut(pos[1], neg[0]);
                        emit(q0, q1, q2);
                        emit(q0, q2, q3);
                    }
                }
            }

    return static_cast<long long>(vset.size()) - static_cast<long long>(eset.size()) +
           faces;
}

} // namespace

long long chi(const GrayscaleImage& img, const CellSelector& sel, Model engine) {
    check_selector(sel);
    if (img.d == 2 && std::isfinite(sel.t) && sel.nu[2] != 0.0)
        throw std::invalid_argument("selector direction dimension mismatch");
    if (engine == Model::Quantized) {
        CellFunction f = upper_extension(img);
        return alternating_count(img, f, sel);
    }
    // Multilinear
    switch (sel.pred) {
        case ValuePredicate::GreaterEqual:
        case ValuePredicate::Greater: {
            CellFunction f = lower_extension(img);
            return alternating_count(img, f, sel);
        }
        case ValuePredicate::Equal:
            return img.d == 2 ? marching_chi_2d(img, sel.s, sel.nu, sel.t)
                              : marching_chi_3d(img, sel.s, sel.nu, sel.t);
        default:
            throw std::invalid_argument("bin predicate is not defined for the multilinear engine");
    }
}

// ---------------------------------------------------------------------------
// Euler integrals
// ---------------------------------------------------------------------------

long long euler_integral_constructible(const CellFunction& f) {
    long long total = 0;
    std::size_t idx = 0;
    for (int c0 = 0; c0 < f.grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < f.grid.cext[1]; ++c1)
            for (int c2 = 0; c2 < f.grid.cext[2]; ++c2, ++idx) {
                double v = f.value[idx];
                double r = std::nearbyint(v);
                if (std::abs(v - r) > 1e-9)
                    throw std::invalid_argument(
                        "constructible Euler integral needs integer cell values");
                long long n = static_cast<long long>(r);
                total += (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -n : n;
            }
    return total;
}

double euler_integral_definable(const CellFunction& f, Flavor flavor,
                                int /*sweep_resolution*/) {
    // Critical-value sweep over the attained values: the ceiling integral is
    // sum over attained v of (jump of chi({f <= v})) * v; the floor integral
    // is the dual -ceiling(-f); both reduce to the same signed sum for
    // piecewise-constant cell data, so the three flavors coincide.
    std::map<double, long long> jump;   // value -> change of chi at that value
    std::size_t idx = 0;
    for (int c0 = 0; c0 < f.grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < f.grid.cext[1]; ++c1)
            for (int c2 = 0; c2 < f.grid.cext[2]; ++c2, ++idx)
                jump[f.value[idx]] += (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -1 : 1;

    double ceiling = 0;
    for (const auto& [v, dchi] : jump) ceiling += static_cast<double>(dchi) * v;
    double floor = ceiling;   // dual sweep over -f lands on the same sum
    switch (flavor) {
        case Flavor::Floor: return floor;
        case Flavor::Ceiling: return ceiling;
        default: return 0.5 * (floor + ceiling);
    }
}

// ---------------------------------------------------------------------------
// Directional sweep support
// ---------------------------------------------------------------------------

CellTable build_cell_table(const GrayscaleImage& img) {
    CellTable t;
    t.grid = CubicalGrid(img);
    CellFunction up = upper_extension(img);
    GrayscaleImage neg = scale_image(img, -1.0);
    CellFunction upn = upper_extension(neg);
    std::size_t n = t.grid.cell_count();
    t.upper.resize(n);
    t.upper_neg.resize(n);
    t.sign.resize(n);
    std::size_t idx = 0;
    for (int c0 = 0; c0 < t.grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < t.grid.cext[1]; ++c1)
            for (int c2 = 0; c2 < t.grid.cext[2]; ++c2, ++idx) {
                t.upper[idx] = up.value[idx];
                t.upper_neg[idx] = upn.value[idx];
                t.sign[idx] = (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -1 : 1;
            }
    return t;
}

void cell_filtration_indices(const GrayscaleImage& img, const CubicalGrid& grid,
                             const std::array<double, 3>& nu,
                             const FiltrationGrid& tgrid,
                             std::vector<std::int32_t>& out) {
    out.resize(grid.cell_count());
    HeightTables ht(img, nu);
    double R = img.radius;
    double inv_dt = 1.0 / tgrid.dt;
    int steps = tgrid.steps;
    std::size_t idx = 0;
    for (int c0 = 0; c0 < grid.cext[0]; ++c0) {
        double h0 = ht.dot[0][(c0 + ht.pick[0]) >> 1];
        for (int c1 = 0; c1 < grid.cext[1]; ++c1) {
            double h01 = h0 + ht.dot[1][(c1 + ht.pick[1]) >> 1];
            for (int c2 = 0; c2 < grid.cext[2]; ++c2, ++idx) {
                double tau = h01 + ht.dot[2][(c2 + ht.pick[2]) >> 1] + R;
                int q = static_cast<int>(std::floor(tau * inv_dt)) - 1;
                if (q < 0) q = 0;
                while (q < steps && q * tgrid.dt < tau) ++q;
                out[idx] = q;   // == steps when the cell never enters
            }
        }
    }
}

} // namespace ertkit
