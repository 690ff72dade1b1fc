#include "ertkit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "json.hpp"

#include "ertkit/parallel.hpp"

namespace ertkit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// chi-square quantile
// ---------------------------------------------------------------------------

namespace {

// Series expansion of P(a,x), good for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), good for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double regularized_gamma_p(double a, double x) {
    if (x <= 0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double chi2_quantile(int L, double prob) {
    if (L < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("quantile probability must lie in (0,1)");
    double a = L / 2.0;
    auto cdf = [a](double x) { return regularized_gamma_p(a, x / 2.0); };
    double hi = L + 10.0 * std::sqrt(2.0 * L) + 50.0;
    while (cdf(hi) < prob) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
        double mid = 0.5 * (lo + hi);
        if (cdf(mid) < prob) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// KL decomposition
// ---------------------------------------------------------------------------

double KlDecomposition::xi_at(int l, int i) const {
    int n = static_cast<int>(xi.size()) / std::max(1, L);
    return xi[static_cast<std::size_t>(l) * n + i];
}

double KlDecomposition::statistic() const {
    if (L == 0) return 0.0;
    int n = static_cast<int>(xi.size()) / L;
    double stat = 0;
    for (int l = 0; l < L; ++l) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += xi[static_cast<std::size_t>(l) * n + i];
        s /= std::sqrt(static_cast<double>(n));
        stat += s * s;
    }
    return stat;
}

namespace {

struct RowView {
    const double* ptr;
    int steps;
};

// Rows of each sample at one direction.
std::vector<RowView> rows_at(const std::vector<const TransformField*>& fields,
                             int dir) {
    std::vector<RowView> rows;
    rows.reserve(fields.size());
    for (const auto* f : fields)
        rows.push_back({&f->data[static_cast<std::size_t>(dir) * f->tgrid.steps],
                        f->tgrid.steps});
    return rows;
}

KlDecomposition kl_decompose_ptr(const std::vector<const TransformField*>& g1,
                                 const std::vector<const TransformField*>& g2) {
    if (g1.size() != g2.size()) throw std::invalid_argument("groups must have equal size");
    int n = static_cast<int>(g1.size());
    if (n < 2) throw std::invalid_argument("need at least two fields per group");
    const TransformField& proto = *g1[0];
    for (const auto* f : g1)
        if (f->tgrid.steps != proto.tgrid.steps || f->dirs.count() != proto.dirs.count())
            throw std::invalid_argument("fields must share grids");
    for (const auto* f : g2)
        if (f->tgrid.steps != proto.tgrid.steps || f->dirs.count() != proto.dirs.count())
            throw std::invalid_argument("fields must share grids");

    int steps = proto.tgrid.steps;
    int dirs = proto.dirs.count();
    double dt = proto.tgrid.dt;

    // nu* maximizes sup_t |mean1 - mean2| over the direction grid.
    int nu_star = 0;
    double best = -1;
    std::vector<double> m1(steps), m2(steps);
    std::vector<double> best_m1, best_m2;
    for (int p = 0; p < dirs; ++p) {
        std::fill(m1.begin(), m1.end(), 0.0);
        std::fill(m2.begin(), m2.end(), 0.0);
        for (const auto* f : g1) {
            const double* row = &f->data[static_cast<std::size_t>(p) * steps];
            for (int q = 0; q < steps; ++q) m1[q] += row[q];
        }
        for (const auto* f : g2) {
            const double* row = &f->data[static_cast<std::size_t>(p) * steps];
            for (int q = 0; q < steps; ++q) m2[q] += row[q];
        }
        double gap = 0;
        for (int q = 0; q < steps; ++q)
            gap = std::max(gap, std::abs(m1[q] - m2[q]) / n);
        if (gap > best) {
            best = gap;
            nu_star = p;
            best_m1 = m1;
            best_m2 = m2;
        }
    }
    for (auto& v : best_m1) v /= n;
    for (auto& v : best_m2) v /= n;

    // Pooled covariance at nu*, each group centered at its own mean,
    // divisor 2n - 2.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(steps, steps);
    auto accumulate = [&](const std::vector<RowView>& rows, const std::vector<double>& mean) {
        Eigen::VectorXd c(steps);
        for (const auto& r : rows) {
            for (int q = 0; q < steps; ++q) c[q] = r.ptr[q] - mean[q];
            K.noalias() += c * c.transpose();
        }
    };
    accumulate(rows_at(g1, nu_star), best_m1);
    accumulate(rows_at(g2, nu_star), best_m2);
    K /= 2.0 * n - 2.0;

    // Eigenpairs of the dt-weighted covariance operator; uniform dt keeps
    // K*dt symmetric, eigenvectors are rescaled to dt-orthonormality.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K * dt);
    if (eig.info() != Eigen::Success)
        throw DegeneracyError("covariance eigendecomposition failed");

    KlDecomposition kl;
    kl.nu_star = nu_star;
    kl.mean1 = best_m1;
    kl.mean2 = best_m2;
    kl.steps = steps;
    kl.dt = dt;
    kl.kappa.assign(K.data(), K.data() + static_cast<std::size_t>(steps) * steps);

    std::vector<int> order(steps);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return eig.eigenvalues()[a] > eig.eigenvalues()[b];
    });

    kl.eigenvalues.resize(steps);
    kl.eigenfunctions.resize(static_cast<std::size_t>(steps) * steps);
    double inv_sqrt_dt = 1.0 / std::sqrt(dt);
    for (int l = 0; l < steps; ++l) {
        kl.eigenvalues[l] = std::max(0.0, eig.eigenvalues()[order[l]]);
        for (int q = 0; q < steps; ++q)
            kl.eigenfunctions[static_cast<std::size_t>(l) * steps + q] =
                eig.eigenvectors()(q, order[l]) * inv_sqrt_dt;
    }

    double total = std::accumulate(kl.eigenvalues.begin(), kl.eigenvalues.end(), 0.0);
    if (total <= 0)
        throw DegeneracyError("degenerate sample: all covariance eigenvalues vanish");

    // Keep the smallest L with > 99% cumulative variance; eigenvalues below
    // 1e-12 * lambda_1 are numerically unstable denominators and never enter.
    double floor_ev = 1e-12 * kl.eigenvalues[0];
    int eligible = 0;
    while (eligible < steps && kl.eigenvalues[eligible] > floor_ev) ++eligible;
    if (eligible == 0)
        throw DegeneracyError("degenerate sample: no usable eigenvalues");
    double run = 0;
    kl.L = eligible;
    for (int l = 0; l < eligible; ++l) {
        run += kl.eigenvalues[l];
        if (run / total > 0.99) {
            kl.L = l + 1;
            break;
        }
    }

    // xi_{l,i} by dt-rectangle quadrature of the paired difference.
    kl.theta_hat.assign(kl.L, 0.0);
    kl.xi.assign(static_cast<std::size_t>(kl.L) * n, 0.0);
    auto r1 = rows_at(g1, nu_star);
    auto r2 = rows_at(g2, nu_star);
    for (int l = 0; l < kl.L; ++l) {
        double scale = 1.0 / std::sqrt(2.0 * kl.eigenvalues[l]);
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int q = 0; q < steps; ++q)
                acc += (r1[i].ptr[q] - r2[i].ptr[q]) * kl.phi(l, q);
            double v = scale * acc * dt;
            kl.xi[static_cast<std::size_t>(l) * n + i] = v;
            kl.theta_hat[l] += v / n;
        }
    }
    return kl;
}

std::vector<const TransformField*> as_ptrs(const SertSample& s) {
    std::vector<const TransformField*> p;
    p.reserve(s.fields.size());
    for (const auto& f : s.fields) p.push_back(&f);
    return p;
}

} // namespace

KlDecomposition kl_decompose(const SertSample& sample1, const SertSample& sample2) {
    return kl_decompose_ptr(as_ptrs(sample1), as_ptrs(sample2));
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

std::string TestReport::to_json() const {
    json j;
    j["algorithm"] = algorithm == TestAlgorithm::Chi2
                         ? "chi2"
                         : (algorithm == TestAlgorithm::PermChi2 ? "perm-chi2"
                                                                 : "full-perm");
    j["statistic"] = statistic;
    if (algorithm == TestAlgorithm::PermChi2) j["p_value"] = threshold_or_pvalue;
    else j["threshold"] = threshold_or_pvalue;
    j["L"] = L;
    j["alpha"] = alpha;
    j["decision"] = reject ? "reject" : "accept";
    j["permutations"] = permutations;
    j["seed"] = seed;
    j["n"] = n;
    if (!warning.empty()) j["warning"] = warning;
    return j.dump();
}

TestReport chi2_test(const SertSample& sample1, const SertSample& sample2,
                     double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
    KlDecomposition kl = kl_decompose(sample1, sample2);
    TestReport r;
    r.algorithm = TestAlgorithm::Chi2;
    r.statistic = kl.statistic();
    r.L = kl.L;
    r.alpha = alpha;
    r.n = sample1.n();
    r.threshold_or_pvalue = chi2_quantile(kl.L, 1.0 - alpha);
    r.reject = r.statistic > r.threshold_or_pvalue;
    return r;
}

TestReport perm_chi2_test(const SertSample& sample1, const SertSample& sample2,
                          double alpha, int permutations, RandomStream stream) {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (permutations < 20) throw std::invalid_argument("need at least 20 permutations");
    int n = sample1.n();
    if (n != sample2.n()) throw std::invalid_argument("groups must have equal size");

    KlDecomposition observed = kl_decompose(sample1, sample2);
    double obs = observed.statistic();

    std::vector<const TransformField*> pooled;
    for (const auto& f : sample1.fields) pooled.push_back(&f);
    for (const auto& f : sample2.fields) pooled.push_back(&f);

    std::vector<int> exceed(permutations, 0);
    parallel_for(static_cast<std::size_t>(permutations), [&](std::size_t k) {
        RandomStream local = stream.substream(k + 1);
        std::vector<int> idx(2 * n);
        std::iota(idx.begin(), idx.end(), 0);
        local.shuffle(idx);
        std::vector<const TransformField*> p1, p2;
        for (int i = 0; i < n; ++i) p1.push_back(pooled[idx[i]]);
        for (int i = n; i < 2 * n; ++i) p2.push_back(pooled[idx[i]]);
        double stat = kl_decompose_ptr(p1, p2).statistic();
        exceed[k] = stat >= obs ? 1 : 0;
    });
    int count = std::accumulate(exceed.begin(), exceed.end(), 0);

    TestReport r;
    r.algorithm = TestAlgorithm::PermChi2;
    r.statistic = obs;
    r.L = observed.L;
    r.alpha = alpha;
    r.n = n;
    r.permutations = permutations;
    r.seed = stream.seed();
    r.threshold_or_pvalue = (1.0 + count) / (permutations + 1.0);
    r.reject = r.threshold_or_pvalue <= alpha;
    return r;
}

namespace {

double within_group_loss(const std::vector<double>& dist, int n,
                         const std::vector<int>& idx) {
    // (1/(2n(n-1))) sum_{k,l} dist(g1_k, g1_l) + dist(g2_k, g2_l);
    // per-group accumulators keep the value bitwise stable when the two
    // groups are passed in either order
    double acc[2] = {0, 0};
    int m = 2 * n;
    for (int g = 0; g < 2; ++g)
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                int i = idx[g * n + a], j = idx[g * n + b];
                acc[g] += 2.0 * dist[static_cast<std::size_t>(i) * m + j];
            }
    return (acc[0] + acc[1]) / (2.0 * n * (n - 1.0));
}

} // namespace

TestReport full_perm_test_matrix(const std::vector<double>& dist, int n,
                                 double alpha, int permutations,
                                 RandomStream stream) {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (permutations < 20) throw std::invalid_argument("need at least 20 permutations");
    int m = 2 * n;
    if (static_cast<int>(dist.size()) != m * m)
        throw std::invalid_argument("distance matrix must be 2n x 2n");

    std::vector<int> identity(m);
    std::iota(identity.begin(), identity.end(), 0);
    double s0 = within_group_loss(dist, n, identity);

    std::vector<double> losses(permutations);
    parallel_for(static_cast<std::size_t>(permutations), [&](std::size_t k) {
        RandomStream local = stream.substream(k + 1);
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        local.shuffle(idx);
        losses[k] = within_group_loss(dist, n, idx);
    });
    std::sort(losses.begin(), losses.end());

    // k* = the largest integer strictly smaller than alpha * Pi.
    double ap = alpha * permutations;
    int kstar = static_cast<int>(std::floor(ap));
    if (static_cast<double>(kstar) == ap) --kstar;

    TestReport r;
    r.algorithm = TestAlgorithm::FullPerm;
    r.statistic = s0;
    r.alpha = alpha;
    r.n = n;
    r.permutations = permutations;
    r.seed = stream.seed();
    if (kstar < 1) {
        r.threshold_or_pvalue = losses.front();
        r.reject = false;
        r.warning = "alpha * permutations < 1: the permutation test cannot reject";
    } else {
        r.threshold_or_pvalue = losses[kstar - 1];
        r.reject = s0 < r.threshold_or_pvalue;
    }
    return r;
}

namespace {

const std::vector<double>& field_payload(const TransformField& f) { return f.data; }
const std::vector<double>& field_payload(const MecField& f) { return f.data; }
std::vector<double> field_payload(const LiftedField& f) {
    return std::vector<double>(f.data.begin(), f.data.end());
}

template <typename Field>
TestReport full_perm_fields(const std::vector<Field>& g1,
                            const std::vector<Field>& g2, double alpha,
                            int permutations, const DistanceSpec& spec,
                            RandomStream stream) {
    if (g1.size() != g2.size()) throw std::invalid_argument("groups must have equal size");
    int n = static_cast<int>(g1.size());
    int m = 2 * n;
    std::vector<const Field*> pooled;
    for (const auto& f : g1) pooled.push_back(&f);
    for (const auto& f : g2) pooled.push_back(&f);

    // Canonical (content-sorted) pooled order: the drawn relabelings then do
    // not depend on which sample came first, making the test exactly
    // symmetric under swapped inputs.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return field_payload(*pooled[a]) < field_payload(*pooled[b]);
    });

    std::vector<double> dist(static_cast<std::size_t>(m) * m, 0.0);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t i) {
        for (int j = static_cast<int>(i) + 1; j < m; ++j) {
            double d = distance(*pooled[order[i]], *pooled[order[j]], spec);
            dist[i * m + j] = d;
            dist[static_cast<std::size_t>(j) * m + i] = d;
        }
    });

    // observed loss on the original grouping, expressed in sorted coordinates
    std::vector<int> observed(m);
    for (int i = 0; i < m; ++i) observed[order[i]] = i;   // original -> sorted slot
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = observed[i];
    double s0 = within_group_loss(dist, n, idx);

    TestReport r = full_perm_test_matrix(dist, n, alpha, permutations, stream);
    r.statistic = s0;
    if (!r.warning.empty()) return r;
    r.reject = s0 < r.threshold_or_pvalue;
    return r;
}

} // namespace

TestReport full_perm_test(const std::vector<TransformField>& group1,
                          const std::vector<TransformField>& group2,
                          double alpha, int permutations,
                          const DistanceSpec& spec, RandomStream stream) {
    if (spec.family != DistanceFamily::Ert && spec.family != DistanceFamily::Sert)
        throw std::invalid_argument("field groups need an ert or sert distance");
    return full_perm_fields(group1, group2, alpha, permutations, spec, stream);
}

TestReport full_perm_test(const std::vector<LiftedField>& group1,
                          const std::vector<LiftedField>& group2, double alpha,
                          int permutations, const DistanceSpec& spec,
                          RandomStream stream) {
    if (spec.family != DistanceFamily::Select)
        throw std::invalid_argument("lifted groups need the select distance");
    return full_perm_fields(group1, group2, alpha, permutations, spec, stream);
}

TestReport full_perm_test(const std::vector<MecField>& group1,
                          const std::vector<MecField>& group2, double alpha,
                          int permutations, const DistanceSpec& spec,
                          RandomStream stream) {
    if (spec.family != DistanceFamily::Mec)
        throw std::invalid_argument("mec groups need the mec distance");
    return full_perm_fields(group1, group2, alpha, permutations, spec, stream);
}

} // namespace ertkit
