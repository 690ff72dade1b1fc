#include "ertkit/lifted.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <zlib.h>

#include "ertkit/parallel.hpp"

namespace ertkit {

namespace {

// Quantized fast path: one pass over the cells per direction. Each cell
// lands in the bucket (last level <= value, first t index admitting it);
// prefix sums over t and suffix sums over s produce the whole field.
void lifted_quantized(const GrayscaleImage& g, LiftedKind kind,
                      const DirectionSet& dirs, const FiltrationGrid& tgrid,
                      const LevelGrid& sgrid, LiftedField& out) {
    CellFunction up = upper_extension(g);
    const CubicalGrid& grid = up.grid;
    std::size_t ncells = grid.cell_count();
    int S = sgrid.count(), T = tgrid.steps;

    // Level bucket per cell: largest k with levels[k] <= value (-1 if none),
    // plus exact-match index for LECT (-1 if the value is off-grid).
    std::vector<std::int32_t> kfloor(ncells), kexact(ncells);
    std::vector<std::int8_t> sign(ncells);
    {
        std::size_t idx = 0;
        for (int c0 = 0; c0 < grid.cext[0]; ++c0)
            for (int c1 = 0; c1 < grid.cext[1]; ++c1)
                for (int c2 = 0; c2 < grid.cext[2]; ++c2, ++idx) {
                    double v = up.value[idx];
                    auto it = std::upper_bound(sgrid.levels.begin(), sgrid.levels.end(), v);
                    int kf = static_cast<int>(it - sgrid.levels.begin()) - 1;
                    kfloor[idx] = kf;
                    kexact[idx] = (kf >= 0 && sgrid.levels[kf] == v) ? kf : -1;
                    sign[idx] = (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -1 : 1;
                }
    }

    parallel_for(static_cast<std::size_t>(dirs.count()), [&](std::size_t p) {
        std::vector<std::int32_t> tIdx;
        cell_filtration_indices(g, grid, dirs.directions[p], tgrid, tIdx);
        // hist[k][q]: signed count of cells with bucket (k, q)
        std::vector<std::int64_t> hist(static_cast<std::size_t>(S + 1) * T, 0);
        for (std::size_t c = 0; c < ncells; ++c) {
            if (tIdx[c] >= T) continue;
            int k = kind == LiftedKind::Select ? kfloor[c] : kexact[c];
            if (kind == LiftedKind::Select) {
                // bucket -1 collects cells below every level
                ++k;
            } else if (k < 0) {
                continue;
            }
            hist[static_cast<std::size_t>(k) * T + tIdx[c]] += sign[c];
        }
        // prefix over t
        for (int k = 0; k <= S; ++k) {
            std::int64_t acc = 0;
            for (int q = 0; q < T; ++q) {
                acc += hist[static_cast<std::size_t>(k) * T + q];
                hist[static_cast<std::size_t>(k) * T + q] = acc;
            }
        }
        for (int q = 0; q < T; ++q) {
            if (kind == LiftedKind::Select) {
                // suffix over levels: chi({value >= s_k}) counts buckets >= k
                std::int64_t acc = 0;
                for (int k = S; k >= 1; --k) {
                    acc += hist[static_cast<std::size_t>(k) * T + q];
                    out.at(static_cast<int>(p), q, k - 1) =
                        static_cast<std::int32_t>(acc);
                }
            } else {
                for (int k = 0; k < S; ++k)
                    out.at(static_cast<int>(p), q, k) = static_cast<std::int32_t>(
                        hist[static_cast<std::size_t>(k) * T + q]);
            }
        }
    });
}

void lifted_multilinear(const GrayscaleImage& g, LiftedKind kind,
                        const DirectionSet& dirs, const FiltrationGrid& tgrid,
                        const LevelGrid& sgrid, LiftedField& out) {
    int S = sgrid.count();
    parallel_for(static_cast<std::size_t>(dirs.count()), [&](std::size_t p) {
        for (int q = 0; q < tgrid.steps; ++q)
            for (int k = 0; k < S; ++k) {
                CellSelector sel = kind == LiftedKind::Select
                                       ? CellSelector::super_level(sgrid.levels[k])
                                       : CellSelector::level(sgrid.levels[k]);
                sel = sel.with_halfspace(dirs.directions[p], tgrid.t(q));
                out.at(static_cast<int>(p), q, k) =
                    static_cast<std::int32_t>(chi(g, sel, Model::Multilinear));
            }
    });
}

} // namespace

LiftedField compute_lifted(const GrayscaleImage& g, LiftedKind kind,
                           const DirectionSet& dirs, const FiltrationGrid& tgrid,
                           const LevelGrid& sgrid, Model engine) {
    validate_image(g);
    if (dirs.d != g.d) throw std::invalid_argument("direction set dimension mismatch");
    LiftedField out;
    out.kind = kind;
    out.dirs = dirs;
    out.tgrid = tgrid;
    out.sgrid = sgrid;
    out.data.assign(static_cast<std::size_t>(dirs.count()) * tgrid.steps * sgrid.count(), 0);
    if (engine == Model::Quantized)
        lifted_quantized(g, kind, dirs, tgrid, sgrid, out);
    else
        lifted_multilinear(g, kind, dirs, tgrid, sgrid, out);
    return out;
}

MecField compute_mec(const LiftedField& select) {
    if (select.kind != LiftedKind::Select)
        throw std::invalid_argument("compute_mec needs a SELECT field");
    MecField m;
    m.dirs = select.dirs;
    m.tgrid = select.tgrid;
    m.data.assign(static_cast<std::size_t>(select.dirs.count()) * select.tgrid.steps, 0.0);
    double ds = select.sgrid.ds;
    for (int p = 0; p < select.dirs.count(); ++p)
        for (int q = 0; q < select.tgrid.steps; ++q) {
            double acc = 0;
            for (int k = 0; k < select.sgrid.count(); ++k)
                if (select.sgrid.levels[k] > 0) acc += select.at(p, q, k) * ds;
            m.data[static_cast<std::size_t>(p) * select.tgrid.steps + q] = acc;
        }
    return m;
}

void export_lifted_csv(const LiftedField& f, const std::string& path) {
    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    std::string body = "dir_index,t,s,value\n";
    char line[128];
    for (int p = 0; p < f.dirs.count(); ++p)
        for (int q = 0; q < f.tgrid.steps; ++q)
            for (int k = 0; k < f.sgrid.count(); ++k) {
                std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%d\n", p, f.tgrid.t(q),
                              f.sgrid.levels[k], f.at(p, q, k));
                body += line;
            }
    if (gz) {
        gzFile out = gzopen(path.c_str(), "wb");
        if (!out) throw DataError("cannot write " + path);
        gzwrite(out, body.data(), static_cast<unsigned>(body.size()));
        gzclose(out);
    } else {
        std::FILE* out = std::fopen(path.c_str(), "wb");
        if (!out) throw DataError("cannot write " + path);
        std::fwrite(body.data(), 1, body.size(), out);
        std::fclose(out);
    }
}

} // namespace ertkit
