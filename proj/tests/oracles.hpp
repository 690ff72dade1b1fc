// Test-only helpers: small image factories and an independent topology
// oracle. The oracle never touches the alternating-count machinery it is
// used to check.
#ifndef ERTKIT_TESTS_ORACLES_HPP
#define ERTKIT_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "ertkit/euler.hpp"
#include "ertkit/image.hpp"

namespace ertkit::testing {

inline GrayscaleImage blank2d(int n, double spacing = 0.25) {
    double half = spacing * (n - 1) / 2.0;
    return make_image(2, {n, n, 1}, {spacing, spacing, 1}, {-half, -half, 0}, 2.0);
}

inline GrayscaleImage blank3d(int n, double spacing = 0.25) {
    double half = spacing * (n - 1) / 2.0;
    return make_image(3, {n, n, n}, {spacing, spacing, spacing},
                      {-half, -half, -half}, 2.0);
}

// chi by counting components minus holes on a supersampled raster of the
// selected closed subcomplex (4-connected foreground, 8-connected holes).
inline long long chi_oracle_2d(const GrayscaleImage& img, const CellSelector& sel) {
    const int F = 4;
    CellFunction up = upper_extension(img);
    const CubicalGrid& grid = up.grid;
    int mw = (img.extents[0] - 1) * F + 1;
    int mh = (img.extents[1] - 1) * F + 1;
    std::vector<char> mask(static_cast<std::size_t>(mw) * mh, 0);

    bool cutting = std::isfinite(sel.t);
    double cutoff = sel.t - img.radius;
    for (int c0 = 0; c0 < grid.cext[0]; ++c0)
        for (int c1 = 0; c1 < grid.cext[1]; ++c1) {
            double v = up.at(c0, c1);
            bool in;
            switch (sel.pred) {
                case ValuePredicate::GreaterEqual: in = v >= sel.s; break;
                case ValuePredicate::Greater: in = v > sel.s; break;
                case ValuePredicate::Equal: in = v == sel.s; break;
                default: in = v >= sel.bin_lo && v < sel.bin_hi; break;
            }
            if (!in) continue;
            if (cutting) {
                double h = -1e300;
                for (int i = c0 / 2; i <= (c0 + 1) / 2; ++i)
                    for (int j = c1 / 2; j <= (c1 + 1) / 2; ++j) {
                        auto p = img.vertex_position(i, j);
                        h = std::max(h, p[0] * sel.nu[0] + p[1] * sel.nu[1]);
                    }
                if (h > cutoff) continue;
            }
            int x0 = (c0 / 2) * F + (c0 & 1 ? 1 : 0);
            int x1 = (c0 & 1) ? ((c0 / 2) * F + F - 1) : x0;
            int y0 = (c1 / 2) * F + (c1 & 1 ? 1 : 0);
            int y1 = (c1 & 1) ? ((c1 / 2) * F + F - 1) : y0;
            for (int x = x0; x <= x1; ++x)
                for (int y = y0; y <= y1; ++y)
                    mask[static_cast<std::size_t>(x) * mh + y] = 1;
        }

    auto flood = [&](std::vector<char>& m, int sx, int sy, char from, char to,
                     bool diag) {
        std::queue<std::pair<int, int>> q;
        q.push({sx, sy});
        m[static_cast<std::size_t>(sx) * mh + sy] = to;
        while (!q.empty()) {
            auto [x, y] = q.front();
            q.pop();
            for (int dx = -1; dx <= 1; ++dx)
                for (int dy = -1; dy <= 1; ++dy) {
                    if (dx == 0 && dy == 0) continue;
                    if (!diag && dx != 0 && dy != 0) continue;
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= mw || ny >= mh) continue;
                    if (m[static_cast<std::size_t>(nx) * mh + ny] != from) continue;
                    m[static_cast<std::size_t>(nx) * mh + ny] = to;
                    q.push({nx, ny});
                }
        }
    };

    long long components = 0;
    std::vector<char> work = mask;
    for (int x = 0; x < mw; ++x)
        for (int y = 0; y < mh; ++y)
            if (work[static_cast<std::size_t>(x) * mh + y] == 1) {
                ++components;
                flood(work, x, y, 1, 2, false);
            }
    for (int x = 0; x < mw; ++x)
        for (int y = 0; y < mh; ++y) {
            bool border = x == 0 || y == 0 || x == mw - 1 || y == mh - 1;
            if (border && work[static_cast<std::size_t>(x) * mh + y] == 0)
                flood(work, x, y, 0, 3, true);
        }
    long long holes = 0;
    for (int x = 0; x < mw; ++x)
        for (int y = 0; y < mh; ++y)
            if (work[static_cast<std::size_t>(x) * mh + y] == 0) {
                ++holes;
                flood(work, x, y, 0, 4, true);
            }
    return components - holes;
}

// 90-degree rotation of a square 2D image about a symmetric origin.
inline GrayscaleImage rotate90(const GrayscaleImage& g) {
    GrayscaleImage out = g;
    int n = g.extents[0];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = g.at(j, n - 1 - i);
    return out;
}

} // namespace ertkit::testing

#endif
