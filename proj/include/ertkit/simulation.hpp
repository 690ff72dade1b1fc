#ifndef ERTKIT_SIMULATION_HPP
#define ERTKIT_SIMULATION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ertkit/image.hpp"
#include "ertkit/inference.hpp"
#include "ertkit/random.hpp"

namespace ertkit {

enum class RecipeKind { TorusG, HEpsilon, MollifiedAnnulus, DiskLinear, BinaryCircle };

// Analytic test fields, vertex-sampled with R = 2.
//
// torus-g     ((sqrt(3/4 (x1^2+x2^2)) - 1/2)^2 + 3/4 x3^2) inside the unit box
// h-epsilon   ((sqrt(a/e x1^2 + e b x2^2) - d)^2 + c x3^2) inside the unit box
// mollified-annulus   bump kernel of bandwidth sigma convolved with the
//                     annulus of radii [0.8, 1.0]
// disk-linear (x1 + 2) on the closed unit disk
// binary-circle       unit-circle boundary rasterized as the vertex band
//                     nearest radius 1 - h, so the quantized complex spans
//                     heights [-1, 1] exactly on the axis directions
struct FieldRecipe {
    RecipeKind kind = RecipeKind::TorusG;
    double epsilon = 1.0;                        // in [0.7, 1]
    double alpha = 0.75, beta = 0.75, gamma = 0.75;   // in [0.5, 1]
    double delta = 0.5;                          // in [0.4, 0.6]
    double sigma = 0.05;                         // mollifier bandwidth
    int extent = 33;                             // vertices per axis
    std::uint64_t seed = 0;
};

GrayscaleImage rasterize(const FieldRecipe& recipe);

// h-epsilon recipe with alpha, beta, gamma ~ U(0.5,1) and delta ~ U(0.4,0.6)
// drawn from the stream.
FieldRecipe draw_h_epsilon(double epsilon, int extent, RandomStream& stream);

enum class SimAlgorithm {
    Chi2,            // Algorithm 1
    PermChi2,        // Algorithm 2
    FullPermErt,     // Algorithm 3 with dist^ERT_{2,2}
    FullPermSert,    // Algorithm 3 with dist^SERT_{2,2}
    FullPermSelect,  // Algorithm 3 with dist^SELECT_2
    FullPermMec,     // Algorithm 3 with dist^MEC_2
};

const char* sim_algorithm_name(SimAlgorithm a);

struct SimGrids {
    int extent = 33;       // image vertices per axis
    int gamma = 64;        // directions
    int delta = 64;        // filtration steps
    int levels = 32;       // level grid size
    double level_hi = 1.25; // shared level range [0, level_hi], covers the
                           // max-normalized h-epsilon family
};

struct SimOutcome {
    std::map<SimAlgorithm, double> rejection_rate;
    std::vector<std::string> jsonl;   // one line per (replicate, algorithm)
};

// Draws n fields from P^(1) and n from P^(eps) per replicate, computes the
// transforms once, runs every requested test at level alpha, and returns
// rejection fractions. Fully deterministic in the seed.
SimOutcome run_experiment(double eps, int n, int reps,
                          const std::vector<SimAlgorithm>& algorithms,
                          const SimGrids& grids, double alpha, int permutations,
                          std::uint64_t seed);

// Single-algorithm convenience wrapper returning the rejection rate.
double run_experiment(double eps, int n, int reps, SimAlgorithm algorithm,
                      const SimGrids& grids, std::uint64_t seed);

} // namespace ertkit

#endif
