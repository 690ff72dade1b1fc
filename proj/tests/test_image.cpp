#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ertkit/image.hpp"
#include "ertkit/random.hpp"

using namespace ertkit;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("csv2d zero image loads with empty support") {
    std::string path = temp_path("ertkit_zeros.csv");
    {
        std::ofstream os(path);
        os << "0,0\n0,0\n";
    }
    GrayscaleImage img = load_image(path);
    CHECK(img.d == 2);
    CHECK(img.extents[0] == 2);
    CHECK(img.extents[1] == 2);
    for (double v : img.values) CHECK(v == 0.0);
    CHECK(support_margin_ok(img));
    std::remove(path.c_str());
}

TEST_CASE("gimg boundary support is repaired by padding and a larger radius") {
    GrayscaleImage img = make_image(2, {4, 4, 1}, {1, 1, 1}, {-1.5, -1.5, 0}, 1.0);
    img.at(0, 0) = 1.0;   // on the grid boundary, outside the margin for R=1
    std::string path = temp_path("ertkit_boundary.gimg");
    save_image(img, path);
    GrayscaleImage back = load_image(path);
    CHECK(back.extents[0] == 6);
    CHECK(back.extents[1] == 6);
    CHECK(back.radius > 1.0);
    CHECK(!back.warning.empty());
    CHECK(support_margin_ok(back));
    // padded copy keeps the value at the shifted position
    CHECK(back.at(1, 1) == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("gimg round-trip is bit exact") {
    RandomStream stream(1);
    GrayscaleImage img = make_image(3, {8, 8, 8}, {0.125, 0.125, 0.125},
                                    {-0.4375, -0.4375, -0.4375}, 2.0);
    for (auto& v : img.values) v = stream.uniform(-1.0, 1.0);
    std::string path = temp_path("ertkit_roundtrip.gimg");
    save_image(img, path);
    GrayscaleImage back = load_image(path);
    REQUIRE(back.values.size() == img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i)
        CHECK(back.values[i] == img.values[i]);
    CHECK(back.radius == img.radius);
    std::remove(path.c_str());
}

TEST_CASE("pgm import maps to [0,1]") {
    std::string path = temp_path("ertkit_gray.pgm");
    {
        std::ofstream os(path);
        os << "P2\n3 3\n255\n0 128 255 0 0 0 255 255 0\n";
    }
    GrayscaleImage img = load_image(path);
    CHECK(img.d == 2);
    CHECK(img.max_value() == doctest::Approx(1.0));
    CHECK(img.min_value() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("malformed inputs are rejected") {
    std::string path = temp_path("ertkit_bad.csv");
    {
        std::ofstream os(path);
        os << "1,2\n3\n";
    }
    CHECK_THROWS_AS(load_image(path), DataError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_image(temp_path("ertkit_missing.gimg")), DataError);
}

TEST_CASE("direction set d=2 Gamma=4 is the exact axis frame") {
    DirectionSet ds = make_direction_set(2, 4);
    REQUIRE(ds.count() == 4);
    CHECK(ds.directions[0] == std::array<double, 3>{1, 0, 0});
    CHECK(ds.directions[1] == std::array<double, 3>{0, 1, 0});
    CHECK(ds.directions[2] == std::array<double, 3>{-1, 0, 0});
    CHECK(ds.directions[3] == std::array<double, 3>{0, -1, 0});
    for (double w : ds.weights) CHECK(w == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("direction set weights sum to the sphere measure") {
    for (int count : {4, 7, 100, 360}) {
        DirectionSet d2 = make_direction_set(2, count);
        double sum = 0;
        for (double w : d2.weights) sum += w;
        CHECK(std::abs(sum - 2 * M_PI) < 1e-9);
    }
    DirectionSet d3 = make_direction_set(3, 100);
    double sum = 0;
    for (int p = 0; p < d3.count(); ++p) {
        sum += d3.weights[p];
        const auto& v = d3.directions[p];
        CHECK(std::abs(std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0) < 1e-12);
    }
    CHECK(std::abs(sum - 4 * M_PI) < 1e-9);
    CHECK_THROWS_AS(make_direction_set(2, 3), std::invalid_argument);
}

TEST_CASE("direction set d=2 Gamma=360 has exact one-degree gaps") {
    DirectionSet ds = make_direction_set(2, 360);
    for (int k = 0; k < 360; ++k) {
        const auto& a = ds.directions[k];
        const auto& b = ds.directions[(k + 1) % 360];
        double dot = a[0] * b[0] + a[1] * b[1];
        CHECK(std::abs(std::acos(std::clamp(dot, -1.0, 1.0)) - M_PI / 180.0) < 1e-12);
    }
}

TEST_CASE("scale_image") {
    GrayscaleImage img = make_image(2, {3, 3, 1}, {0.25, 0.25, 1}, {-0.25, -0.25, 0}, 2.0);
    img.at(1, 1) = 1.0;
    GrayscaleImage same = scale_image(img, 1.0);
    CHECK(same.values == img.values);

    GrayscaleImage neg = scale_image(img, -0.5);
    for (double v : neg.values) CHECK((v == 0.0 || v == -0.5));

    GrayscaleImage zero = scale_image(img, 0.0);
    for (double v : zero.values) CHECK(v == 0.0);

    CHECK_THROWS_AS(scale_image(img, std::nan("")), DataError);
}

TEST_CASE("random streams are reproducible and order independent") {
    RandomStream a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // distinct stream ids decorrelate
    RandomStream c(42, 8);
    int equal = 0;
    RandomStream a2(42, 7);
    for (int i = 0; i < 100; ++i)
        if (a2.next_u64() == c.next_u64()) ++equal;
    CHECK(equal == 0);

    // draws depend only on (seed, id, counter), not on interleaving
    RandomStream s1(9, 1), s2(9, 2);
    double x1 = s1.uniform();
    double y1 = s2.uniform();
    RandomStream t2(9, 2), t1(9, 1);
    double y2 = t2.uniform();
    double x2 = t1.uniform();
    CHECK(x1 == x2);
    CHECK(y1 == y2);
}

TEST_CASE("uniform and normal draws look sane") {
    RandomStream s(5);
    double sum = 0, sum2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.01);

    double g = 0, g2 = 0;
    for (int i = 0; i < n; ++i) {
        double z = s.normal();
        g += z;
        g2 += z * z;
    }
    CHECK(std::abs(g / n) < 0.03);
    CHECK(std::abs(g2 / n - 1.0) < 0.05);
}

TEST_CASE("filtration and level grids") {
    FiltrationGrid tg(4.0, 17);
    CHECK(tg.t(0) == 0.0);
    CHECK(tg.t(16) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(tg.frac(16) == 1.0);

    GrayscaleImage img = make_image(2, {3, 3, 1}, {0.25, 0.25, 1}, {-0.25, -0.25, 0}, 2.0);
    img.at(1, 1) = 2.0;
    LevelGrid lg = LevelGrid::covering(img, 9);
    CHECK(lg.levels.front() == 0.0);
    CHECK(lg.levels.back() == 2.0);
    CHECK(lg.ds == doctest::Approx(0.25));
}
