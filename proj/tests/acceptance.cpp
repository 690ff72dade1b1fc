// Acceptance suite: runs every gate end-to-end and prints one pass/fail
// line per criterion. Exits nonzero if any gate fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ertkit/alignment.hpp"
#include "ertkit/image.hpp"
#include "ertkit/inference.hpp"
#include "ertkit/lifted.hpp"
#include "ertkit/metrics.hpp"
#include "ertkit/radon_dual.hpp"
#include "ertkit/random.hpp"
#include "ertkit/simulation.hpp"
#include "ertkit/transforms.hpp"

using namespace ertkit;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

GrayscaleImage random_binary(RandomStream& stream, int d, int extent) {
    double spacing = d == 2 ? 0.1 : 0.2;
    double half = spacing * (extent - 1) / 2.0;
    GrayscaleImage img = make_image(
        d, {extent, extent, d == 3 ? extent : 1}, {spacing, spacing, spacing},
        {-half, -half, d == 3 ? -half : 0.0}, 2.0);
    for (auto& v : img.values) v = stream.below(2) ? 1.0 : 0.0;
    return img;
}

GrayscaleImage random_dyadic(RandomStream& stream, int extent, int levels, int den) {
    double spacing = 0.25;
    double half = spacing * (extent - 1) / 2.0;
    GrayscaleImage img = make_image(2, {extent, extent, 1}, {spacing, spacing, 1},
                                    {-half, -half, 0}, 2.0);
    for (auto& v : img.values) v = static_cast<double>(stream.below(levels)) / den;
    return img;
}

void criterion_1() {
    Timer timer;
    RandomStream stream(101);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        int d = trial % 2 == 0 ? 2 : 3;
        GrayscaleImage K = random_binary(stream, d, d == 2 ? 16 : 8);
        DirectionSet dirs = make_direction_set(d, d == 2 ? 16 : 32);
        FiltrationGrid tgrid(2 * K.radius, 33);
        LevelGrid sgrid = LevelGrid::covering(K, 3);
        TransformField ect = compute_ect(K, dirs, tgrid);
        for (Flavor f : {Flavor::Floor, Flavor::Ceiling, Flavor::Averaged}) {
            TransformField ert = compute_ert(K, dirs, tgrid, sgrid, Model::Quantized, f);
            for (std::size_t i = 0; i < ect.data.size() && ok; ++i)
                if (ert.data[i] != ect.data[i]) {
                    ok = false;
                    detail = "mismatch at trial " + std::to_string(trial);
                }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "50 binary images, 3 flavors, exact; %.1f s",
                  timer.seconds());
    report(1, ok, "ERT generalizes ECT", ok ? buf : detail);
}

void criterion_2() {
    Timer timer;
    // rasterized circle boundary: ECT = 0 / 1 / 0 on [0,1) / [1,3) / [3,4]
    FieldRecipe recipe;
    recipe.kind = RecipeKind::BinaryCircle;
    recipe.extent = 21;   // h = 1/8
    GrayscaleImage ring = rasterize(recipe);
    DirectionSet dirs = make_direction_set(2, 4);
    FiltrationGrid tgrid(4.0, 9);   // dt = 1/2 clears the 2h-wide closure window
    TransformField ect = compute_ect(ring, dirs, tgrid);
    bool golden = true;
    for (int p = 0; p < dirs.count() && golden; ++p)
        for (int q = 0; q < tgrid.steps && golden; ++q) {
            double t = tgrid.t(q);
            double expect = (t >= 1.0 && t < 3.0) ? 1.0 : 0.0;
            if (ect.at(p, q) != expect) golden = false;
        }

    // analytic Appendix-E disk fixture via the assembly formula
    bool fixture = true;
    for (double t = 1.0; t < 3.0; t += 0.125) {
        double avg = assemble_ert_value(t, 0.0, t - 1.0, 0.0, Flavor::Averaged);
        if (std::abs(avg - (t + 1.0) / 2.0) > 1e-9) fixture = false;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "circle ECT exact, disk fixture to 1e-9; %.1f s",
                  timer.seconds());
    report(2, golden && fixture, "Appendix-E golden curves",
           golden ? (fixture ? buf : "disk fixture off") : "circle ECT mismatch");
}

void criterion_3() {
    Timer timer;
    FieldRecipe recipe;
    recipe.kind = RecipeKind::MollifiedAnnulus;
    recipe.sigma = 0.05;
    recipe.extent = 257;
    GrayscaleImage soft = rasterize(recipe);

    bool soft_ok = true;
    double worst = 0;
    for (double t : {1.995, 2.0, 2.005}) {
        double v = ert_point_multilinear(soft, {0, 1, 0}, t, 64, 1.0, Flavor::Averaged);
        worst = std::max(worst, std::abs(v));
        if (std::abs(v) > 0.1) soft_ok = false;
    }

    // the sharp annulus keeps ECT = 1 on the same window
    GrayscaleImage hard = make_image(2, {257, 257, 1}, soft.spacing, soft.origin, 2.0);
    for (int i = 0; i < 257; ++i)
        for (int j = 0; j < 257; ++j) {
            auto p = hard.vertex_position(i, j);
            double r = std::hypot(p[0], p[1]);
            if (r >= 0.8 && r <= 1.0) hard.at(i, j) = 1.0;
        }
    bool hard_ok = true;
    for (double t : {1.995, 2.0, 2.005})
        if (chi(hard, CellSelector::super_level(1.0).with_halfspace({0, 1, 0}, t),
                Model::Quantized) != 1)
            hard_ok = false;

    char buf[112];
    std::snprintf(buf, sizeof buf,
                  "mollified |ERT| <= %.3f, binary ECT = 1 on the window; %.1f s",
                  worst, timer.seconds());
    report(3, soft_ok && hard_ok, "Appendix-D counterexample", buf);
}

void criterion_4() {
    Timer timer;
    RandomStream stream(104);
    DirectionSet dirs = make_direction_set(2, 8);
    FiltrationGrid tgrid(4.0, 17);
    bool homog = true, equiv = true;
    for (int trial = 0; trial < 200 && homog && equiv; ++trial) {
        GrayscaleImage g = random_dyadic(stream, 5, 5, 8);
        LevelGrid sgrid = LevelGrid::covering(g, 5);
        TransformField base = compute_ert(g, dirs, tgrid, sgrid, Model::Quantized,
                                          Flavor::Averaged);
        for (double lambda : {-2.0, -0.5, 0.5, 3.0}) {
            TransformField scaled = compute_ert(scale_image(g, lambda), dirs, tgrid,
                                                sgrid, Model::Quantized, Flavor::Averaged);
            for (std::size_t i = 0; i < base.data.size(); ++i)
                if (scaled.data[i] != lambda * base.data[i]) homog = false;
        }
        // exact 90-degree rotation: index shift on the symmetry-closed set
        GrayscaleImage rot = g;
        int nv = g.extents[0];
        for (int i = 0; i < nv; ++i)
            for (int j = 0; j < nv; ++j) rot.at(i, j) = g.at(j, nv - 1 - i);
        TransformField rotf = compute_ert(rot, dirs, tgrid, sgrid, Model::Quantized,
                                          Flavor::Averaged);
        for (int p = 0; p < 8; ++p)
            for (int q = 0; q < tgrid.steps; ++q)
                if (rotf.at(p, q) != base.at((p + 6) % 8, q)) equiv = false;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "200 images x 4 scales, exact; %.1f s",
                  timer.seconds());
    report(4, homog && equiv, "homogeneity and 90-degree equivariance",
           homog ? (equiv ? buf : "equivariance broken") : "homogeneity broken");
}

void criterion_5() {
    Timer timer;
    RandomStream stream(105);
    DirectionSet dirs = make_direction_set(2, 8);
    FiltrationGrid tgrid(4.0, 33);
    bool endpoints = true, roundtrip = true;
    for (int trial = 0; trial < 100; ++trial) {
        GrayscaleImage g = random_dyadic(stream, 9, 3, 2);
        TransformField ert = compute_ert(g, dirs, tgrid, LevelGrid::covering(g, 5),
                                         Model::Quantized, Flavor::Averaged);
        TransformField sert = compute_sert(ert);
        TransformField rec = recover_ert_from_sert(sert);
        for (int p = 0; p < dirs.count(); ++p) {
            if (std::abs(sert.at(p, 0)) > 1e-9 ||
                std::abs(sert.at(p, tgrid.steps - 1)) > 1e-9)
                endpoints = false;
            double osc = 0, l1 = 0;
            for (int q = 1; q < tgrid.steps; ++q)
                osc += std::abs(ert.at(p, q) - ert.at(p, q - 1));
            for (int q = 0; q < tgrid.steps; ++q)
                l1 += std::abs(rec.at(p, q) - ert.at(p, q)) * tgrid.dt;
            if (l1 > std::max(tgrid.dt * osc, 1e-12)) roundtrip = false;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "100 images, endpoints < 1e-9, L1 round-trip <= dt*osc; %.1f s",
                  timer.seconds());
    report(5, endpoints && roundtrip, "SERT endpoints and ERT recovery", buf);
}

void criterion_6() {
    Timer timer;
    RandomStream stream(106);
    bool ok = true;
    for (int d : {2, 3}) {
        long long diag = d == 2 ? 0 : 2;
        for (int trial = 0; trial < 1000 && ok; ++trial) {
            std::array<double, 3> x{stream.uniform(-1, 1), stream.uniform(-1, 1),
                                    d == 3 ? stream.uniform(-1, 1) : 0.0};
            std::array<double, 3> y{stream.uniform(-1, 1), stream.uniform(-1, 1),
                                    d == 3 ? stream.uniform(-1, 1) : 0.0};
            if (schapira_kernel_chi(x, x, d, 2.0) != diag) ok = false;
            if (schapira_kernel_chi(x, y, d, 2.0) != (x == y ? diag : 1)) ok = false;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "1000 pairs per dimension, exact; %.1f s",
                  timer.seconds());
    report(6, ok, "Schapira kernel identity", buf);
}

void criterion_7() {
    Timer timer;
    RandomStream stream(107);
    DirectionSet dirs = make_direction_set(2, 360);
    FiltrationGrid tgrid(4.0, 513);
    double worst = 0;
    bool ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        GrayscaleImage g = make_image(2, {5, 5, 1}, {0.125, 0.125, 1},
                                      {-0.25, -0.25, 0}, 2.0);
        for (auto& v : g.values) v = static_cast<double>(stream.below(3)) / 2.0;
        std::vector<std::array<double, 3>> probes;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                auto p = g.vertex_position(i, j);
                probes.push_back({p[0] + 0.0625, p[1] + 0.0625, 0});
            }
        InvertReport rep = invert_check(g, dirs, tgrid, probes);
        worst = std::max(worst, rep.max_error);
        if (rep.max_error > 0.25 * 0.5) ok = false;   // level gap 0.5
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "200 images, max error %.2e <= 0.125; %.1f s",
                  worst, timer.seconds());
    report(7, ok, "desk-scale ERT inversion", buf);
}

GrayscaleImage raster_torus_transformed(double h, double half, double theta,
                                        double lambda) {
    int extent = static_cast<int>(std::round(2 * half / h)) + 1;
    GrayscaleImage img = make_image(3, {extent, extent, extent}, {h, h, h},
                                    {-half, -half, -half}, 2.0);
    double c = std::cos(-theta), s = std::sin(-theta);   // A_theta^{-1}
    for (int i = 0; i < extent; ++i)
        for (int j = 0; j < extent; ++j)
            for (int k = 0; k < extent; ++k) {
                auto p = img.vertex_position(i, j, k);
                double y0 = c * p[0] + s * p[2];
                double y1 = p[1];
                double y2 = -s * p[0] + c * p[2];
                if (std::abs(y0) > 1 || std::abs(y1) > 1 || std::abs(y2) > 1) continue;
                double rad = std::sqrt(0.75 * (y0 * y0 + y1 * y1));
                img.at(i, j, k) =
                    lambda * ((rad - 0.5) * (rad - 0.5) + 0.75 * y2 * y2);
            }
    return img;
}

void criterion_8() {
    Timer timer;
    FieldRecipe recipe;
    recipe.kind = RecipeKind::TorusG;
    recipe.extent = 33;
    GrayscaleImage g = rasterize(recipe);
    DirectionSet dirs = make_direction_set(3, 500);
    FiltrationGrid tgrid(4.0, 64);
    LevelGrid sgrid = LevelGrid::covering(g, 8);
    TransformField ref = compute_ert(g, dirs, tgrid, sgrid, Model::Quantized,
                                     Flavor::Averaged);

    // 73 x 61 objective surface over (theta, lambda) with src = ref
    std::vector<double> thetas, lambdas;
    for (int i = 0; i < 73; ++i) thetas.push_back(-M_PI / 2 + i * (M_PI / 72));
    for (int i = 0; i < 61; ++i) lambdas.push_back(-1.5 + i * 0.05);
    auto surf = objective_surface(ref, ref, thetas, lambdas);
    std::size_t best = 0;
    for (std::size_t i = 1; i < surf.size(); ++i)
        if (surf[i] < surf[best]) best = i;
    bool surface_ok = thetas[best / lambdas.size()] == 0.0 &&
                      lambdas[best % lambdas.size()] == 1.0;

    // Figure-7 scenario: src image = (1/5) * A_{pi/6,*} g
    double h = 2.0 / 32.0;
    GrayscaleImage src_img = raster_torus_transformed(h, 1.5, M_PI / 6, 0.2);
    TransformField src = compute_ert(src_img, dirs, tgrid, sgrid, Model::Quantized,
                                     Flavor::Averaged);
    AlignmentResult res = align(ref, src, 4096);
    double dtheta = rotation_distance(res.rotation, rotation_xz(M_PI / 6));
    double dlambda = std::abs(res.scale - 0.2);
    bool align_ok = dtheta <= 2.0 * M_PI / 180.0 && dlambda <= 0.02;

    char buf[144];
    std::snprintf(buf, sizeof buf,
                  "surface argmin at (0,1): %s; recovered within %.2f deg, %.4f of "
                  "(pi/6, 1/5); %.0f s",
                  surface_ok ? "yes" : "no", dtheta * 180 / M_PI, dlambda,
                  timer.seconds());
    report(8, surface_ok && align_ok, "ERT-based alignment", buf);
}

void criterion_9() {
    Timer timer;
    SimGrids grids;
    grids.extent = 17;
    grids.gamma = 64;
    grids.delta = 64;
    grids.levels = 64;
    std::vector<SimAlgorithm> algs{SimAlgorithm::Chi2, SimAlgorithm::PermChi2,
                                   SimAlgorithm::FullPermErt, SimAlgorithm::FullPermSert,
                                   SimAlgorithm::FullPermSelect,
                                   SimAlgorithm::FullPermMec};
    std::vector<double> one_minus{0.0, 0.05, 0.1, 0.125, 0.15, 0.2, 0.3};
    std::map<SimAlgorithm, std::vector<double>> rates;
    for (double om : one_minus) {
        SimOutcome out = run_experiment(1.0 - om, 30, 20, algs, grids, 0.05, 499,
                                        20260810);
        for (auto alg : algs) rates[alg].push_back(out.rejection_rate.at(alg));
    }
    bool monotone = true, power = true;
    for (auto alg : algs) {
        const auto& r = rates[alg];
        for (std::size_t i = 0; i + 1 < r.size(); ++i)
            if (r[i + 1] < r[i] - 0.1) monotone = false;
        if (r.back() < 0.95) power = false;
    }
    std::printf("    smoke rejection rates (cols: 1-eps = 0, .05, .1, .125, .15, .2, .3)\n");
    for (auto alg : algs) {
        std::printf("    %-18s", sim_algorithm_name(alg));
        for (double r : rates[alg]) std::printf(" %.2f", r);
        std::printf("\n");
    }
    char buf[144];
    std::snprintf(buf, sizeof buf,
                  "smoke profile 17^3, 20 reps: monotone within 0.1: %s, power at "
                  "1-eps=0.3 >= 0.95: %s; %.0f s",
                  monotone ? "yes" : "no", power ? "yes" : "no", timer.seconds());
    report(9, monotone && power, "Table-1 reproduction (smoke profile)", buf);
}

double chi2_cdf_oracle(int L, double x) {
    int n = 4000;
    double b = std::sqrt(x);
    double h = b / n;
    double norm = 2.0 / std::exp(0.5 * L * std::log(2.0) + std::lgamma(L / 2.0));
    auto g = [&](double u) { return norm * std::pow(u, L - 1) * std::exp(-0.5 * u * u); };
    double acc = g(0) + g(b);
    for (int i = 1; i < n; ++i) acc += g(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double chi2_quantile_oracle(int L, double prob) {
    double lo = 0, hi = L + 10 * std::sqrt(2.0 * L) + 50;
    while (chi2_cdf_oracle(L, hi) < prob) hi *= 2;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        if (chi2_cdf_oracle(L, mid) < prob) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

void criterion_10() {
    Timer timer;
    bool quantiles = true;
    for (int L = 1; L <= 10; ++L)
        for (double prob : {0.5, 0.9, 0.95, 0.99})
            if (std::abs(chi2_quantile(L, prob) - chi2_quantile_oracle(L, prob)) > 1e-6)
                quantiles = false;

    // KL orthonormality and scaling invariance on synthetic functional data
    RandomStream stream(110);
    DirectionSet dirs = make_direction_set(2, 4);
    FiltrationGrid tgrid(4.0, 24);
    auto sample = [&](double shift) {
        SertSample s;
        for (int i = 0; i < 24; ++i) {
            TransformField f;
            f.kind = FieldKind::Sert;
            f.dirs = dirs;
            f.tgrid = tgrid;
            f.data.assign(static_cast<std::size_t>(dirs.count()) * tgrid.steps, 0.0);
            for (int q = 0; q < tgrid.steps; ++q)
                f.at(0, q) = shift + (0.3 + 0.1 * (q % 3)) * stream.normal();
            s.fields.push_back(std::move(f));
        }
        return s;
    };
    SertSample s1 = sample(0.0), s2 = sample(0.5);
    KlDecomposition kl = kl_decompose(s1, s2);
    bool ortho = true;
    for (int l = 0; l < 5; ++l)
        for (int m = 0; m < 5; ++m) {
            double acc = 0;
            for (int q = 0; q < tgrid.steps; ++q)
                acc += kl.phi(l, q) * kl.phi(m, q) * tgrid.dt;
            if (std::abs(acc - (l == m ? 1.0 : 0.0)) > 1e-8) ortho = false;
        }
    SertSample t1 = s1, t2 = s2;
    for (auto* s : {&t1, &t2})
        for (auto& f : s->fields)
            for (auto& v : f.data) v *= 4.0;
    double stat_gap = std::abs(kl_decompose(t1, t2).statistic() - kl.statistic());
    bool invariant = stat_gap < 1e-9;

    char buf[144];
    std::snprintf(buf, sizeof buf,
                  "quantile oracle to 1e-6, phi orthonormal to 1e-8, statistic "
                  "rescale gap %.1e; %.1f s",
                  stat_gap, timer.seconds());
    report(10, quantiles && ortho && invariant, "KL machinery", buf);
}

} // namespace

int main() {
    Timer total;
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_10();
    criterion_9();
    std::printf("%d/10 criteria passed in %.0f s\n", 10 - failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
