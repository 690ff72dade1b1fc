#ifndef ERTKIT_INFERENCE_HPP
#define ERTKIT_INFERENCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ertkit/metrics.hpp"
#include "ertkit/random.hpp"
#include "ertkit/transforms.hpp"

namespace ertkit {

// One group of SERT fields sharing grids; pairing across groups is by index.
struct SertSample {
    std::vector<TransformField> fields;

    int n() const { return static_cast<int>(fields.size()); }
};

// Karhunen-Loeve machinery at the most separating direction nu*.
struct KlDecomposition {
    int nu_star = 0;                          // direction index
    std::vector<double> mean1, mean2;         // over the t grid at nu*
    std::vector<double> kappa;                // pooled covariance, steps x steps
    std::vector<double> eigenvalues;          // descending, clipped at 0
    std::vector<double> eigenfunctions;       // [l][q], dt-orthonormal rows
    int L = 0;                                // per the > 0.99 variance rule
    std::vector<double> theta_hat;            // length L
    std::vector<double> xi;                   // [l][i], L x n
    int steps = 0;
    double dt = 0;

    double phi(int l, int q) const { return eigenfunctions[static_cast<std::size_t>(l) * steps + q]; }
    double xi_at(int l, int i) const;
    double statistic() const;                  // sum_l ((1/sqrt n) sum_i xi)^2
};

KlDecomposition kl_decompose(const SertSample& sample1, const SertSample& sample2);

enum class TestAlgorithm { Chi2, PermChi2, FullPerm };

struct TestReport {
    TestAlgorithm algorithm = TestAlgorithm::Chi2;
    double statistic = 0;
    // chi2: the rejection threshold; perm-chi2: the p-value; full-perm: the
    // k*-th smallest permuted loss.
    double threshold_or_pvalue = 0;
    int L = 0;
    bool reject = false;
    int permutations = 0;
    std::uint64_t seed = 0;
    double alpha = 0;
    int n = 0;
    std::string warning;

    std::string to_json() const;
};

// Lower quantile of the chi-square distribution with L degrees of freedom:
// inverse of the regularized lower incomplete gamma by bracketed bisection.
double chi2_quantile(int L, double prob);

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// Algorithm 1.
TestReport chi2_test(const SertSample& sample1, const SertSample& sample2,
                     double alpha);

// Algorithm 2: label permutations re-run the whole pipeline (nu*,
// covariance, eigens, L, statistic); p = (1 + #{perm >= observed})/(Pi + 1).
TestReport perm_chi2_test(const SertSample& sample1, const SertSample& sample2,
                          double alpha, int permutations, RandomStream stream);

// Algorithm 3 on a precomputed symmetric 2n x 2n distance matrix (group 1 =
// rows 0..n-1). Rejects when the observed within-group loss is below the
// k*-th smallest permuted loss, k* = largest integer < alpha * Pi.
TestReport full_perm_test_matrix(const std::vector<double>& dist, int n,
                                 double alpha, int permutations,
                                 RandomStream stream);

// Convenience wrappers building the matrix from fields.
TestReport full_perm_test(const std::vector<TransformField>& group1,
                          const std::vector<TransformField>& group2,
                          double alpha, int permutations,
                          const DistanceSpec& spec, RandomStream stream);
TestReport full_perm_test(const std::vector<LiftedField>& group1,
                          const std::vector<LiftedField>& group2, double alpha,
                          int permutations, const DistanceSpec& spec,
                          RandomStream stream);
TestReport full_perm_test(const std::vector<MecField>& group1,
                          const std::vector<MecField>& group2, double alpha,
                          int permutations, const DistanceSpec& spec,
                          RandomStream stream);

} // namespace ertkit

#endif
