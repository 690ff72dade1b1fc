#include "ertkit/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "ertkit/parallel.hpp"

namespace ertkit {

using nlohmann::json;

const char* field_kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::Ect: return "ect";
        case FieldKind::ErtFloor: return "ert_floor";
        case FieldKind::ErtCeiling: return "ert_ceiling";
        case FieldKind::ErtAvg: return "ert_avg";
        default: return "sert";
    }
}

namespace {

TransformField make_field(FieldKind kind, const DirectionSet& dirs,
                          const FiltrationGrid& tgrid) {
    TransformField f;
    f.kind = kind;
    f.dirs = dirs;
    f.tgrid = tgrid;
    f.data.assign(static_cast<std::size_t>(dirs.count()) * tgrid.steps, 0.0);
    return f;
}

} // namespace

TransformField compute_ect(const GrayscaleImage& K, const DirectionSet& dirs,
                           const FiltrationGrid& tgrid) {
    validate_image(K);
    if (!K.is_binary()) throw std::invalid_argument("compute_ect needs a binary image");
    if (dirs.d != K.d) throw std::invalid_argument("direction set dimension mismatch");

    CellFunction up = upper_extension(K);
    const CubicalGrid& grid = up.grid;
    std::size_t ncells = grid.cell_count();
    std::vector<std::int8_t> sign(ncells);
    {
        std::size_t idx = 0;
        for (int c0 = 0; c0 < grid.cext[0]; ++c0)
            for (int c1 = 0; c1 < grid.cext[1]; ++c1)
                for (int c2 = 0; c2 < grid.cext[2]; ++c2, ++idx)
                    sign[idx] = (CubicalGrid::cell_dim(c0, c1, c2) & 1) ? -1 : 1;
    }

    TransformField out = make_field(FieldKind::Ect, dirs, tgrid);
    out.provenance = "ect quantized";
    parallel_for(static_cast<std::size_t>(dirs.count()), [&](std::size_t p) {
        std::vector<std::int32_t> tIdx;
        cell_filtration_indices(K, grid, dirs.directions[p], tgrid, tIdx);
        std::vector<std::int64_t> w(tgrid.steps, 0);
        for (std::size_t c = 0; c < ncells; ++c) {
            if (up.value[c] < 1.0 || tIdx[c] >= tgrid.steps) continue;
            w[tIdx[c]] += sign[c];
        }
        std::int64_t acc = 0;
        for (int q = 0; q < tgrid.steps; ++q) {
            acc += w[q];
            out.at(static_cast<int>(p), q) = static_cast<double>(acc);
        }
    });
    return out;
}

double assemble_ert_value(double int_select_g, double int_select_neg,
                          double int_lect_g, double int_lect_neg, Flavor flavor) {
    double floor_v = int_select_g - int_select_neg + int_lect_neg;
    double ceiling_v = int_select_g - int_select_neg - int_lect_g;
    switch (flavor) {
        case Flavor::Floor: return floor_v;
        case Flavor::Ceiling: return ceiling_v;
        default: return 0.5 * (floor_v + ceiling_v);
    }
}

namespace {

// Exact quantized assembly. integral_0^inf SELECT(g)(s) ds collapses to the
// signed sum of positive cell values, and the LECT curves of quantized data
// are supported on finitely many s, so every flavor equals
// integral SELECT(g) - integral SELECT(-g).
TransformField ert_quantized(const GrayscaleImage& g, const DirectionSet& dirs,
                             const FiltrationGrid& tgrid, Flavor flavor) {
    CellTable table = build_cell_table(g);
    std::size_t ncells = table.grid.cell_count();
    FieldKind kind = flavor == Flavor::Floor
                         ? FieldKind::ErtFloor
                         : (flavor == Flavor::Ceiling ? FieldKind::ErtCeiling
                                                      : FieldKind::ErtAvg);
    TransformField out = make_field(kind, dirs, tgrid);
    out.provenance = "ert quantized exact";
    parallel_for(static_cast<std::size_t>(dirs.count()), [&](std::size_t p) {
        std::vector<std::int32_t> tIdx;
        cell_filtration_indices(g, table.grid, dirs.directions[p], tgrid, tIdx);
        std::vector<double> w(tgrid.steps, 0.0);
        for (std::size_t c = 0; c < ncells; ++c) {
            int q = tIdx[c];
            if (q >= tgrid.steps) continue;
            double contrib = 0;
            if (table.upper[c] > 0) contrib += table.upper[c];
            if (table.upper_neg[c] > 0) contrib -= table.upper_neg[c];
            if (contrib != 0) w[q] += table.sign[c] * contrib;
        }
        double acc = 0;
        for (int q = 0; q < tgrid.steps; ++q) {
            acc += w[q];
            out.at(static_cast<int>(p), q) = acc;
        }
    });
    return out;
}

TransformField ert_multilinear(const GrayscaleImage& g, const DirectionSet& dirs,
                               const FiltrationGrid& tgrid, const LevelGrid& sgrid,
                               Flavor flavor) {
    double ds = sgrid.ds;
    if (!(ds > 0)) throw std::invalid_argument("level grid spacing must be positive");
    double smax = std::max({g.max_value(), -g.min_value(),
                            sgrid.levels.empty() ? 0.0 : sgrid.levels.back()});
    int K = std::max(1, static_cast<int>(std::ceil(smax / ds)));

    GrayscaleImage neg = scale_image(g, -1.0);
    FieldKind kind = flavor == Flavor::Floor
                         ? FieldKind::ErtFloor
                         : (flavor == Flavor::Ceiling ? FieldKind::ErtCeiling
                                                      : FieldKind::ErtAvg);
    TransformField out = make_field(kind, dirs, tgrid);
    out.provenance = "ert multilinear rectangle";
    bool has_neg = g.min_value() < 0;

    parallel_for(static_cast<std::size_t>(dirs.count()), [&](std::size_t p) {
        for (int q = 0; q < tgrid.steps; ++q) {
            double t = tgrid.t(q);
            double Sg = 0, Sn = 0, Lg = 0, Ln = 0;
            for (int k = 1; k <= K; ++k) {
                double s = k * ds;
                CellSelector sel =
                    CellSelector::super_level(s).with_halfspace(dirs.directions[p], t);
                Sg += ds * chi(g, sel, Model::Multilinear);
                CellSelector lev =
                    CellSelector::level(s).with_halfspace(dirs.directions[p], t);
                Lg += ds * chi(g, lev, Model::Multilinear);
                if (has_neg) {
                    Sn += ds * chi(neg, sel, Model::Multilinear);
                    Ln += ds * chi(neg, lev, Model::Multilinear);
                }
            }
            out.at(static_cast<int>(p), q) = assemble_ert_value(Sg, Sn, Lg, Ln, flavor);
        }
    });
    return out;
}

} // namespace

TransformField compute_ert(const GrayscaleImage& g, const DirectionSet& dirs,
                           const FiltrationGrid& tgrid, const LevelGrid& sgrid,
                           Model engine, Flavor flavor) {
    validate_image(g);
    if (dirs.d != g.d) throw std::invalid_argument("direction set dimension mismatch");
    return engine == Model::Quantized ? ert_quantized(g, dirs, tgrid, flavor)
                                      : ert_multilinear(g, dirs, tgrid, sgrid, flavor);
}

double ert_point_multilinear(const GrayscaleImage& g,
                             const std::array<double, 3>& nu, double t,
                             int levels, double smax, Flavor flavor) {
    if (levels < 1) throw std::invalid_argument("need at least one level");
    double ds = smax / levels;
    GrayscaleImage neg = scale_image(g, -1.0);
    bool has_neg = g.min_value() < 0;
    double Sg = 0, Sn = 0, Lg = 0, Ln = 0;
    for (int k = 1; k <= levels; ++k) {
        double s = k * ds;
        CellSelector sel = CellSelector::super_level(s).with_halfspace(nu, t);
        CellSelector lev = CellSelector::level(s).with_halfspace(nu, t);
        Sg += ds * chi(g, sel, Model::Multilinear);
        Lg += ds * chi(g, lev, Model::Multilinear);
        if (has_neg) {
            Sn += ds * chi(neg, sel, Model::Multilinear);
            Ln += ds * chi(neg, lev, Model::Multilinear);
        }
    }
    return assemble_ert_value(Sg, Sn, Lg, Ln, flavor);
}

TransformField compute_sert(const TransformField& ert) {
    if (ert.kind == FieldKind::Sert)
        throw std::invalid_argument("compute_sert input is already a SERT");
    TransformField out = make_field(FieldKind::Sert, ert.dirs, ert.tgrid);
    out.provenance = "sert of " + std::string(field_kind_name(ert.kind));
    int T = ert.tgrid.steps;
    double dt = ert.tgrid.dt;
    std::vector<double> cum(T);
    for (int p = 0; p < ert.dirs.count(); ++p) {
        cum[0] = 0;
        for (int q = 1; q < T; ++q)
            cum[q] = cum[q - 1] + 0.5 * dt * (ert.at(p, q - 1) + ert.at(p, q));
        double total = cum[T - 1];
        for (int q = 0; q < T; ++q)
            out.at(p, q) = cum[q] - ert.tgrid.frac(q) * total;
    }
    return out;
}

TransformField recover_ert_from_sert(const TransformField& sert) {
    if (sert.kind != FieldKind::Sert)
        throw std::invalid_argument("recover_ert_from_sert needs a SERT field");
    TransformField out = make_field(FieldKind::ErtAvg, sert.dirs, sert.tgrid);
    out.provenance = "recovered from sert";
    int T = sert.tgrid.steps;
    double dt = sert.tgrid.dt;
    for (int p = 0; p < sert.dirs.count(); ++p) {
        double base = (sert.at(p, 1) - sert.at(p, 0)) / dt;
        for (int q = 0; q < T; ++q) {
            int a = std::min(q, T - 2);
            out.at(p, q) = (sert.at(p, a + 1) - sert.at(p, a)) / dt - base;
        }
    }
    return out;
}

void export_field_csv(const TransformField& f, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "wb");
    if (!out) throw DataError("cannot write " + path);
    std::fputs("dir_index,t,value\n", out);
    for (int p = 0; p < f.dirs.count(); ++p)
        for (int q = 0; q < f.tgrid.steps; ++q)
            std::fprintf(out, "%d,%.17g,%.17g\n", p, f.tgrid.t(q), f.at(p, q));
    std::fclose(out);
}

namespace {
constexpr char kFieldMagic[8] = {'G', 'F', 'L', 'D', 0, 0, 0, 1};
}

void export_field_binary(const TransformField& f, const std::string& path) {
    json h;
    h["kind"] = field_kind_name(f.kind);
    h["d"] = f.dirs.d;
    h["gamma"] = f.dirs.count();
    h["delta"] = f.tgrid.steps;
    h["T"] = f.tgrid.T;
    std::vector<std::vector<double>> dd;
    for (const auto& v : f.dirs.directions)
        dd.push_back(std::vector<double>(v.begin(), v.begin() + f.dirs.d));
    h["directions"] = dd;
    h["weights"] = f.dirs.weights;
    h["dtype"] = "f64";
    h["order"] = "C";
    std::string header = h.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os.write(kFieldMagic, 8);
    std::uint32_t n = static_cast<std::uint32_t>(header.size());
    unsigned char b[4] = {static_cast<unsigned char>(n & 0xff),
                          static_cast<unsigned char>((n >> 8) & 0xff),
                          static_cast<unsigned char>((n >> 16) & 0xff),
                          static_cast<unsigned char>((n >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    os.write(reinterpret_cast<const char*>(f.data.data()),
             static_cast<std::streamsize>(f.data.size() * sizeof(double)));
    if (!os) throw DataError("write failed for " + path);
}

TransformField load_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kFieldMagic, 8) != 0)
        throw DataError("bad field magic in " + path);
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated field header");
    std::uint32_t n = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                      (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    std::string header(n, '\0');
    is.read(header.data(), n);
    if (!is) throw DataError("truncated field header");
    json h;
    try {
        h = json::parse(header);
    } catch (const std::exception& e) {
        throw DataError(std::string("malformed field header: ") + e.what());
    }

    TransformField f;
    std::string kind = h.at("kind").get<std::string>();
    if (kind == "ect") f.kind = FieldKind::Ect;
    else if (kind == "ert_floor") f.kind = FieldKind::ErtFloor;
    else if (kind == "ert_ceiling") f.kind = FieldKind::ErtCeiling;
    else if (kind == "ert_avg") f.kind = FieldKind::ErtAvg;
    else if (kind == "sert") f.kind = FieldKind::Sert;
    else throw DataError("unknown field kind " + kind);

    f.dirs.d = h.at("d").get<int>();
    auto dd = h.at("directions").get<std::vector<std::vector<double>>>();
    for (const auto& v : dd) {
        std::array<double, 3> a{0, 0, 0};
        for (std::size_t i = 0; i < v.size() && i < 3; ++i) a[i] = v[i];
        f.dirs.directions.push_back(a);
    }
    f.dirs.weights = h.at("weights").get<std::vector<double>>();
    f.tgrid = FiltrationGrid(h.at("T").get<double>(), h.at("delta").get<int>());
    f.data.resize(static_cast<std::size_t>(f.dirs.count()) * f.tgrid.steps);
    is.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(double)));
    if (!is) throw DataError("truncated field payload");
    return f;
}

} // namespace ertkit
