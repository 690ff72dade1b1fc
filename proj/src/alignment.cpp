#include "ertkit/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ertkit/parallel.hpp"

namespace ertkit {

Mat3 mat3_identity() {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

Mat3 mat3_transpose(const Mat3& a) {
    Mat3 t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
    return t;
}

std::array<double, 3> mat3_apply(const Mat3& a, const std::array<double, 3>& v) {
    return {a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
            a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
            a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2]};
}

bool mat3_is_orthogonal(const Mat3& a, double tol) {
    Mat3 g = mat3_mul(mat3_transpose(a), a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(g[i][j] - (i == j ? 1.0 : 0.0)) > tol) return false;
    return true;
}

Mat3 rotation_xz(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}

Mat3 rotation_xy(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

Mat3 axis_angle(const std::array<double, 3>& axis, double angle) {
    double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (n == 0) return mat3_identity();
    double x = axis[0] / n, y = axis[1] / n, z = axis[2] / n;
    double c = std::cos(angle), s = std::sin(angle), v = 1 - c;
    return {{{c + x * x * v, x * y * v - z * s, x * z * v + y * s},
             {y * x * v + z * s, c + y * y * v, y * z * v - x * s},
             {z * x * v - y * s, z * y * v + x * s, c + z * z * v}}};
}

double rotation_distance(const Mat3& a, const Mat3& b) {
    Mat3 r = mat3_mul(mat3_transpose(a), b);
    double tr = r[0][0] + r[1][1] + r[2][2];
    double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

namespace {

// Index permutation sending each grid direction p to the grid direction
// nearest A^{-1} nu_p.
std::vector<int> nn_resample_map(const DirectionSet& dirs, const Mat3& A) {
    Mat3 ainv = mat3_transpose(A);   // orthogonal
    int n = dirs.count();
    std::vector<int> map(n);
    for (int p = 0; p < n; ++p) {
        auto v = mat3_apply(ainv, dirs.directions[p]);
        int best = 0;
        double bestdot = -2;
        for (int r = 0; r < n; ++r) {
            const auto& u = dirs.directions[r];
            double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            if (dot > bestdot) {
                bestdot = dot;
                best = r;
            }
        }
        map[p] = best;
    }
    return map;
}

struct Inner {
    double sr = 0, rr = 0, ss = 0;
};

// Weighted inner products of src against the resampled ref.
Inner inner_products(const TransformField& ref, const TransformField& src,
                     const std::vector<int>& map) {
    Inner in;
    double dt = ref.tgrid.dt;
    for (int p = 0; p < ref.dirs.count(); ++p) {
        double w = ref.dirs.weights[p] * dt;
        const double* rrow = &ref.data[static_cast<std::size_t>(map[p]) * ref.tgrid.steps];
        const double* srow = &src.data[static_cast<std::size_t>(p) * src.tgrid.steps];
        double sr = 0, rr = 0, ss = 0;
        for (int q = 0; q < ref.tgrid.steps; ++q) {
            sr += srow[q] * rrow[q];
            rr += rrow[q] * rrow[q];
            ss += srow[q] * srow[q];
        }
        in.sr += w * sr;
        in.rr += w * rr;
        in.ss += w * ss;
    }
    return in;
}

void check_compatible(const TransformField& a, const TransformField& b) {
    if (a.dirs.d != b.dirs.d || a.dirs.count() != b.dirs.count() ||
        a.tgrid.steps != b.tgrid.steps || a.tgrid.T != b.tgrid.T)
        throw std::invalid_argument("alignment needs matching grids");
}

} // namespace

TransformField rotate_field(const TransformField& F, const Mat3& A) {
    if (!mat3_is_orthogonal(A, 1e-8))
        throw std::invalid_argument("rotate_field needs an orthogonal matrix");
    auto map = nn_resample_map(F.dirs, A);
    TransformField out = F;
    for (int p = 0; p < F.dirs.count(); ++p)
        for (int q = 0; q < F.tgrid.steps; ++q) out.at(p, q) = F.at(map[p], q);
    return out;
}

double best_scale(const TransformField& ref, const TransformField& rotated) {
    check_compatible(ref, rotated);
    double dt = ref.tgrid.dt;
    double num = 0, den = 0;
    for (int p = 0; p < ref.dirs.count(); ++p) {
        double w = ref.dirs.weights[p] * dt;
        for (int q = 0; q < ref.tgrid.steps; ++q) {
            num += w * ref.at(p, q) * rotated.at(p, q);
            den += w * rotated.at(p, q) * rotated.at(p, q);
        }
    }
    return den == 0 ? 0.0 : num / den;
}

namespace {

AlignmentCandidate evaluate(const TransformField& ref, const TransformField& src,
                            const Mat3& A) {
    auto map = nn_resample_map(ref.dirs, A);
    Inner in = inner_products(ref, src, map);
    double lambda = in.rr == 0 ? 0.0 : in.sr / in.rr;
    double obj2 = in.ss - 2 * lambda * in.sr + lambda * lambda * in.rr;
    return {A, lambda, std::sqrt(std::max(0.0, obj2))};
}

std::vector<Mat3> coarse_candidates(int d, const DirectionSet& dirs, int budget) {
    std::vector<Mat3> cands;
    cands.push_back(mat3_identity());
    if (d == 2) {
        int n = std::max(4, std::min(budget, 720));
        for (int k = 0; k < n; ++k) {
            double th = 2.0 * M_PI * k / n;
            Mat3 rot = rotation_xy(th);
            cands.push_back(rot);
            // reflection coset of O(2)
            Mat3 refl = mat3_mul(rot, Mat3{{{1, 0, 0}, {0, -1, 0}, {0, 0, 1}}});
            cands.push_back(refl);
        }
    } else {
        // axis grid from the direction set x uniform angles, both cosets
        int axes = std::min(dirs.count(), std::max(8, budget / 24));
        int angles = 12;
        int stride = std::max(1, dirs.count() / axes);
        Mat3 mirror{{{1, 0, 0}, {0, 1, 0}, {0, 0, -1}}};
        for (int a = 0; a < dirs.count(); a += stride)
            for (int k = 1; k <= angles; ++k) {
                double ang = M_PI * k / angles;
                Mat3 rot = axis_angle(dirs.directions[a], ang);
                cands.push_back(rot);
                cands.push_back(mat3_mul(rot, mirror));
            }
        cands.push_back(mirror);
    }
    return cands;
}

} // namespace

AlignmentResult align(const TransformField& ref, const TransformField& src,
                      int rotation_budget) {
    check_compatible(ref, src);
    if (rotation_budget < 1)
        throw std::invalid_argument("rotation budget must be >= 1");

    std::vector<Mat3> cands = coarse_candidates(ref.dirs.d, ref.dirs, rotation_budget);
    if (static_cast<int>(cands.size()) > std::max(1, rotation_budget))
        cands.resize(std::max(1, rotation_budget));

    std::vector<AlignmentCandidate> evals(cands.size());
    parallel_for(cands.size(), [&](std::size_t i) { evals[i] = evaluate(ref, src, cands[i]); });

    std::size_t best = 0;
    for (std::size_t i = 1; i < evals.size(); ++i)
        if (evals[i].objective < evals[best].objective) best = i;

    AlignmentResult res;
    res.grid_trace = evals;
    AlignmentCandidate cur = evals[best];

    // Local refinement: compose with small axis rotations on a shrinking
    // grid. For d=2 only the in-plane axis is active.
    double step = ref.dirs.d == 2 ? (2.0 * M_PI / std::max<std::size_t>(cands.size(), 8))
                                  : 0.35;
    for (int iter = 0; iter < 24 && step > 1e-5; ++iter, step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            std::vector<Mat3> locals;
            if (ref.dirs.d == 2) {
                for (int s : {-1, 1})
                    locals.push_back(mat3_mul(rotation_xy(s * step), cur.rotation));
            } else {
                for (int axis = 0; axis < 3; ++axis)
                    for (int s : {-1, 1}) {
                        std::array<double, 3> ax{0, 0, 0};
                        ax[axis] = 1;
                        locals.push_back(mat3_mul(axis_angle(ax, s * step), cur.rotation));
                    }
            }
            for (const auto& A : locals) {
                AlignmentCandidate c = evaluate(ref, src, A);
                if (c.objective < cur.objective) {
                    cur = c;
                    improved = true;
                }
            }
        }
    }

    res.rotation = cur.rotation;
    res.scale = cur.scale;
    res.objective = cur.objective;
    return res;
}

std::vector<double> objective_surface(const TransformField& ref,
                                      const TransformField& src,
                                      const std::vector<double>& thetas,
                                      const std::vector<double>& lambdas) {
    check_compatible(ref, src);
    std::vector<double> out(thetas.size() * lambdas.size());
    parallel_for(thetas.size(), [&](std::size_t i) {
        Mat3 A = ref.dirs.d == 2 ? rotation_xy(thetas[i]) : rotation_xz(thetas[i]);
        auto map = nn_resample_map(ref.dirs, A);
        Inner in = inner_products(ref, src, map);
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            double l = lambdas[j];
            double obj2 = in.ss - 2 * l * in.sr + l * l * in.rr;
            out[i * lambdas.size() + j] = std::sqrt(std::max(0.0, obj2));
        }
    });
    return out;
}

} // namespace ertkit
