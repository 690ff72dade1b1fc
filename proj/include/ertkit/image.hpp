#ifndef ERTKIT_IMAGE_HPP
#define ERTKIT_IMAGE_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ertkit {

// Thrown on malformed or unreadable input data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown on numerical degeneracy (CLI exit code 4).
class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Model { Quantized, Multilinear };

const char* model_name(Model m);
Model model_from_name(const std::string& name);

// Dense d-dimensional intensity grid. Intensities live on lattice VERTICES;
// vertex (i,j,k) sits at origin + (i,j,k)*spacing and the flat array is
// C-ordered over the extents. Every nonzero vertex must stay inside the
// ball of radius `radius` with a margin of at least one cell diagonal;
// `repair_support` restores that by zero-padding and enlarging the radius.
struct GrayscaleImage {
    int d = 2;
    std::array<int, 3> extents{1, 1, 1};   // axes >= d have extent 1
    std::array<double, 3> spacing{1, 1, 1};
    std::array<double, 3> origin{0, 0, 0};
    std::vector<double> values;
    double radius = 1.0;
    Model model = Model::Quantized;
    std::string warning;   // set when loading had to repair the support margin

    std::size_t vertex_count() const {
        return static_cast<std::size_t>(extents[0]) * extents[1] * extents[2];
    }
    std::size_t index(int i, int j, int k = 0) const {
        return (static_cast<std::size_t>(i) * extents[1] + j) * extents[2] + k;
    }
    double at(int i, int j, int k = 0) const { return values[index(i, j, k)]; }
    double& at(int i, int j, int k = 0) { return values[index(i, j, k)]; }

    std::array<double, 3> vertex_position(int i, int j, int k = 0) const {
        return {origin[0] + i * spacing[0], origin[1] + j * spacing[1],
                origin[2] + k * spacing[2]};
    }
    double cell_diagonal() const;
    double min_value() const;
    double max_value() const;
    bool is_binary() const;   // all values in {0,1}
};

// Makes an all-zero image with the given geometry.
GrayscaleImage make_image(int d, std::array<int, 3> extents,
                          std::array<double, 3> spacing,
                          std::array<double, 3> origin, double radius,
                          Model model = Model::Quantized);

// Throws DataError if any structural invariant is broken. The support
// margin is reported separately by support_margin_ok.
void validate_image(const GrayscaleImage& img);
bool support_margin_ok(const GrayscaleImage& img);

// Zero-pads boundary support and enlarges the radius until the margin
// invariant holds; records what was done in `warning`.
GrayscaleImage repair_support(GrayscaleImage img);

GrayscaleImage scale_image(const GrayscaleImage& g, double lambda);

enum class ImageFormat { Auto, Gimg, Csv2d, Pgm };

GrayscaleImage load_image(const std::string& path,
                          ImageFormat format = ImageFormat::Auto);
void save_image(const GrayscaleImage& img, const std::string& path);  // gimg

// Discretization of S^{d-1}: unit directions with quadrature weights
// summing to the sphere measure (2*pi for d=2, 4*pi for d=3).
struct DirectionSet {
    int d = 2;
    std::vector<std::array<double, 3>> directions;
    std::vector<double> weights;

    int count() const { return static_cast<int>(directions.size()); }
};

// d=2: uniform angles 2*pi*k/count, generated quadrant-symmetric so the set
// is exactly closed under 90-degree rotations when 4 | count.
// d=3: Fibonacci lattice with equal weights. Requires count >= 4.
DirectionSet make_direction_set(int d, int count);

// Uniform samples t_0 = 0 < ... < t_{steps-1} = T with T = 2R.
struct FiltrationGrid {
    double T = 0;
    int steps = 0;
    double dt = 0;

    FiltrationGrid() = default;
    FiltrationGrid(double T_, int steps_);
    double t(int q) const { return q * dt; }
    // Fraction t_q / T, exact at the endpoints.
    double frac(int q) const { return static_cast<double>(q) / (steps - 1); }
};

// Sorted uniform intensity thresholds.
struct LevelGrid {
    std::vector<double> levels;
    double ds = 0;

    int count() const { return static_cast<int>(levels.size()); }
    static LevelGrid uniform(double lo, double hi, int count);
    // Covers [min(0, min g), max(0, max g)].
    static LevelGrid covering(const GrayscaleImage& img, int count);
};

} // namespace ertkit

#endif
