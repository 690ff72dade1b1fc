#include "ertkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ertkit {

using nlohmann::json;

const char* model_name(Model m) {
    return m == Model::Quantized ? "quantized" : "multilinear";
}

Model model_from_name(const std::string& name) {
    if (name == "quantized") return Model::Quantized;
    if (name == "multilinear") return Model::Multilinear;
    throw DataError("unknown model: " + name);
}

double GrayscaleImage::cell_diagonal() const {
    double s = 0;
    for (int a = 0; a < d; ++a) s += spacing[a] * spacing[a];
    return std::sqrt(s);
}

double GrayscaleImage::min_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::min(m, v);
    return m;
}

double GrayscaleImage::max_value() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::max(m, v);
    return m;
}

bool GrayscaleImage::is_binary() const {
    for (double v : values)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

GrayscaleImage make_image(int d, std::array<int, 3> extents,
                          std::array<double, 3> spacing,
                          std::array<double, 3> origin, double radius,
                          Model model) {
    GrayscaleImage img;
    img.d = d;
    img.extents = extents;
    img.spacing = spacing;
    img.origin = origin;
    img.radius = radius;
    img.model = model;
    if (d == 2) {
        img.extents[2] = 1;
        img.spacing[2] = 1;
        img.origin[2] = 0;
    }
    img.values.assign(img.vertex_count(), 0.0);
    return img;
}

void validate_image(const GrayscaleImage& img) {
    if (img.d != 2 && img.d != 3) throw DataError("image dimension must be 2 or 3");
    for (int a = 0; a < img.d; ++a) {
        if (img.extents[a] < 2) throw DataError("extents must be >= 2 on every axis");
        if (!(img.spacing[a] > 0)) throw DataError("spacing must be positive");
    }
    if (img.values.size() != img.vertex_count())
        throw DataError("value array length does not match extents");
    for (double v : img.values)
        if (!std::isfinite(v)) throw DataError("non-finite intensity value");
    if (!(img.radius > 0) || !std::isfinite(img.radius))
        throw DataError("radius must be positive and finite");
}

namespace {

double max_nonzero_norm(const GrayscaleImage& img, bool* boundary_nonzero) {
    double maxn = -1.0;
    if (boundary_nonzero) *boundary_nonzero = false;
    for (int i = 0; i < img.extents[0]; ++i)
        for (int j = 0; j < img.extents[1]; ++j)
            for (int k = 0; k < img.extents[2]; ++k) {
                if (img.at(i, j, k) == 0.0) continue;
                auto p = img.vertex_position(i, j, k);
                double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                maxn = std::max(maxn, n);
                if (boundary_nonzero &&
                    (i == 0 || i == img.extents[0] - 1 || j == 0 ||
                     j == img.extents[1] - 1 ||
                     (img.d == 3 && (k == 0 || k == img.extents[2] - 1))))
                    *boundary_nonzero = true;
            }
    return maxn;
}

} // namespace

bool support_margin_ok(const GrayscaleImage& img) {
    double maxn = max_nonzero_norm(img, nullptr);
    if (maxn < 0) return true;  // zero image, support empty
    return maxn <= img.radius - img.cell_diagonal();
}

GrayscaleImage repair_support(GrayscaleImage img) {
    bool boundary = false;
    double maxn = max_nonzero_norm(img, &boundary);
    if (maxn < 0) return img;

    std::string note;
    if (boundary) {
        GrayscaleImage padded = img;
        for (int a = 0; a < img.d; ++a) {
            padded.extents[a] = img.extents[a] + 2;
            padded.origin[a] = img.origin[a] - img.spacing[a];
        }
        padded.values.assign(padded.vertex_count(), 0.0);
        for (int i = 0; i < img.extents[0]; ++i)
            for (int j = 0; j < img.extents[1]; ++j)
                for (int k = 0; k < img.extents[2]; ++k)
                    padded.at(i + 1, j + 1, img.d == 3 ? k + 1 : k) =
                        img.at(i, j, k);
        img = std::move(padded);
        note += "zero-padded one boundary layer; ";
    }
    double need = maxn + img.cell_diagonal();
    if (img.radius < need) {
        note += "radius enlarged from " + std::to_string(img.radius) + " to " +
                std::to_string(need);
        img.radius = need;
    }
    if (!note.empty()) {
        if (!img.warning.empty()) img.warning += "; ";
        img.warning += "support margin repaired: " + note;
    }
    return img;
}

GrayscaleImage scale_image(const GrayscaleImage& g, double lambda) {
    if (!std::isfinite(lambda)) throw DataError("scale factor must be finite");
    GrayscaleImage out = g;
    for (double& v : out.values) v *= lambda;
    return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

namespace {

constexpr char kGimgMagic[8] = {'G', 'I', 'M', 'G', 0, 0, 0, 1};

static_assert(sizeof(double) == 8, "64-bit doubles required");

void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated gimg header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

GrayscaleImage finish_load(GrayscaleImage img) {
    validate_image(img);
    if (!support_margin_ok(img)) {
        img = repair_support(std::move(img));
        validate_image(img);
    }
    return img;
}

GrayscaleImage load_gimg(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kGimgMagic, 8) != 0)
        throw DataError("bad gimg magic in " + path);
    std::uint32_t hlen = read_u32le(is);
    std::string header(hlen, '\0');
    is.read(header.data(), hlen);
    if (!is) throw DataError("truncated gimg header in " + path);

    json h;
    try {
        h = json::parse(header);
    } catch (const std::exception& e) {
        throw DataError(std::string("malformed gimg header: ") + e.what());
    }
    GrayscaleImage img;
    try {
        img.d = h.at("d").get<int>();
        if (img.d != 2 && img.d != 3)
            throw DataError("gimg dimension must be 2 or 3");
        auto ext = h.at("extents").get<std::vector<int>>();
        auto sp = h.at("spacing").get<std::vector<double>>();
        auto org = h.at("origin").get<std::vector<double>>();
        if (static_cast<int>(ext.size()) != img.d || sp.size() != ext.size() ||
            org.size() != ext.size())
            throw DataError("gimg header arrays must have length d");
        img.extents = {1, 1, 1};
        img.spacing = {1, 1, 1};
        img.origin = {0, 0, 0};
        for (int a = 0; a < img.d; ++a) {
            img.extents[a] = ext[a];
            img.spacing[a] = sp[a];
            img.origin[a] = org[a];
        }
        img.radius = h.at("radius").get<double>();
        img.model = model_from_name(h.at("model").get<std::string>());
        if (h.at("dtype").get<std::string>() != "f64" ||
            h.at("order").get<std::string>() != "C")
            throw DataError("gimg supports only dtype f64, order C");
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed gimg header: ") + e.what());
    }
    img.values.resize(img.vertex_count());
    is.read(reinterpret_cast<char*>(img.values.data()),
            static_cast<std::streamsize>(img.values.size() * sizeof(double)));
    if (!is) throw DataError("truncated gimg payload in " + path);
    return finish_load(std::move(img));
}

GrayscaleImage load_csv2d(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw DataError("bad number '" + tok + "' in " + path);
            }
        }
        if (!rows.empty() && row.size() != rows[0].size())
            throw DataError("ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows[0].empty()) throw DataError("empty csv2d file " + path);

    GrayscaleImage img;
    img.d = 2;
    img.extents = {static_cast<int>(rows.size()),
                   static_cast<int>(rows[0].size()), 1};

    // Sidecar header <path>.json carries the geometry; without it the grid
    // gets unit spacing centered at the origin.
    std::ifstream side(path + ".json");
    if (side) {
        json h;
        try {
            h = json::parse(side);
        } catch (const std::exception& e) {
            throw DataError(std::string("malformed csv2d sidecar: ") + e.what());
        }
        auto sp = h.value("spacing", std::vector<double>{1.0, 1.0});
        auto org = h.value("origin", std::vector<double>{0.0, 0.0});
        if (sp.size() != 2 || org.size() != 2)
            throw DataError("csv2d sidecar arrays must have length 2");
        img.spacing = {sp[0], sp[1], 1};
        img.origin = {org[0], org[1], 0};
        img.radius = h.value("radius", 0.0);
        img.model = model_from_name(h.value("model", std::string("quantized")));
    } else {
        img.spacing = {1, 1, 1};
        img.origin = {-(img.extents[0] - 1) / 2.0, -(img.extents[1] - 1) / 2.0, 0};
        img.radius = 0.0;
        img.warning = "csv2d sidecar missing, using unit spacing centered at 0";
    }
    if (img.radius <= 0) {
        double half = 0;
        for (int a = 0; a < 2; ++a) {
            double lo = std::abs(img.origin[a]);
            double hi = std::abs(img.origin[a] + (img.extents[a] - 1) * img.spacing[a]);
            half += std::pow(std::max(lo, hi), 2);
        }
        img.radius = std::sqrt(half) + 2 * img.cell_diagonal();
    }
    img.values.resize(img.vertex_count());
    for (int i = 0; i < img.extents[0]; ++i)
        for (int j = 0; j < img.extents[1]; ++j) img.at(i, j) = rows[i][j];
    return finish_load(std::move(img));
}

GrayscaleImage load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    std::string magic;
    is >> magic;
    if (magic != "P2" && magic != "P5") throw DataError("unsupported pgm magic " + magic);

    auto next_int = [&is, &path]() {
        // skip whitespace and '#' comments
        while (true) {
            int c = is.peek();
            if (c == '#') {
                std::string junk;
                std::getline(is, junk);
            } else if (std::isspace(c)) {
                is.get();
            } else {
                break;
            }
        }
        long v;
        if (!(is >> v)) throw DataError("truncated pgm header in " + path);
        return v;
    };
    long w = next_int();
    long h = next_int();
    long maxval = next_int();
    if (w < 2 || h < 2) throw DataError("pgm too small");
    if (maxval <= 0 || maxval > 255) throw DataError("only 8-bit pgm supported");

    std::vector<double> vals(static_cast<std::size_t>(w) * h);
    if (magic == "P5") {
        is.get();  // single whitespace after maxval
        std::vector<unsigned char> raw(vals.size());
        is.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size()));
        if (!is) throw DataError("truncated pgm payload in " + path);
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = static_cast<double>(raw[i]) / maxval;
    } else {
        for (auto& v : vals) {
            long x = next_int();
            v = static_cast<double>(x) / maxval;
        }
    }

    GrayscaleImage img;
    img.d = 2;
    img.extents = {static_cast<int>(h), static_cast<int>(w), 1};
    img.spacing = {1, 1, 1};
    img.origin = {-(img.extents[0] - 1) / 2.0, -(img.extents[1] - 1) / 2.0, 0};
    img.values.resize(img.vertex_count());
    for (int i = 0; i < img.extents[0]; ++i)
        for (int j = 0; j < img.extents[1]; ++j)
            img.at(i, j) = vals[static_cast<std::size_t>(i) * w + j];
    double half = std::sqrt(std::pow((img.extents[0] - 1) / 2.0, 2) +
                            std::pow((img.extents[1] - 1) / 2.0, 2));
    img.radius = half + 2 * img.cell_diagonal();
    return finish_load(std::move(img));
}

} // namespace

GrayscaleImage load_image(const std::string& path, ImageFormat format) {
    if (format == ImageFormat::Auto) {
        auto ends_with = [&path](const char* suf) {
            std::string s(suf);
            return path.size() >= s.size() &&
                   path.compare(path.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with(".gimg")) format = ImageFormat::Gimg;
        else if (ends_with(".csv")) format = ImageFormat::Csv2d;
        else if (ends_with(".pgm")) format = ImageFormat::Pgm;
        else throw DataError("cannot infer format of " + path);
    }
    switch (format) {
        case ImageFormat::Gimg: return load_gimg(path);
        case ImageFormat::Csv2d: return load_csv2d(path);
        case ImageFormat::Pgm: return load_pgm(path);
        default: throw DataError("bad format");
    }
}

void save_image(const GrayscaleImage& img, const std::string& path) {
    validate_image(img);
    json h;
    h["d"] = img.d;
    std::vector<int> ext(img.extents.begin(), img.extents.begin() + img.d);
    std::vector<double> sp(img.spacing.begin(), img.spacing.begin() + img.d);
    std::vector<double> org(img.origin.begin(), img.origin.begin() + img.d);
    h["extents"] = ext;
    h["spacing"] = sp;
    h["origin"] = org;
    h["radius"] = img.radius;
    h["model"] = model_name(img.model);
    h["dtype"] = "f64";
    h["order"] = "C";
    std::string header = h.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os.write(kGimgMagic, 8);
    write_u32le(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    os.write(reinterpret_cast<const char*>(img.values.data()),
             static_cast<std::streamsize>(img.values.size() * sizeof(double)));
    if (!os) throw DataError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Sampling grids
// ---------------------------------------------------------------------------

DirectionSet make_direction_set(int d, int count) {
    if (count < 4) throw std::invalid_argument("direction count must be >= 4");
    DirectionSet ds;
    ds.d = d;
    ds.directions.resize(count);
    ds.weights.assign(count, 0.0);
    if (d == 2) {
        // First-quadrant angles are computed once; the other quadrants are
        // exact (swap, negate) images, making the set bitwise closed under
        // 90-degree rotation when 4 | count.
        for (int k = 0; k < count; ++k) ds.directions[k] = {0, 0, 0};
        for (int k = 0; 4 * k <= count; ++k) {
            double a = 2.0 * M_PI * k / count;
            double c = std::cos(a), s = std::sin(a);
            if (k == 0) { c = 1.0; s = 0.0; }
            if (4 * k == count) { c = 0.0; s = 1.0; }
            int k90 = k + count / 4, k180 = k + count / 2, k270 = k + 3 * (count / 4);
            ds.directions[k] = {c, s, 0};
            if (count % 4 == 0) {
                if (k90 < count) ds.directions[k90] = {-s, c, 0};
                if (k180 < count) ds.directions[k180] = {-c, -s, 0};
                if (k270 < count) ds.directions[k270] = {s, -c, 0};
            }
        }
        if (count % 4 != 0) {
            for (int k = 0; k < count; ++k) {
                double a = 2.0 * M_PI * k / count;
                ds.directions[k] = {std::cos(a), std::sin(a), 0};
            }
        }
        double w = 2.0 * M_PI / count;
        ds.weights.assign(count, w);
    } else if (d == 3) {
        // Fibonacci lattice.
        double ga = M_PI * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            double z = 1.0 - (2.0 * k + 1.0) / count;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double a = ga * k;
            std::array<double, 3> v{r * std::cos(a), r * std::sin(a), z};
            double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            ds.directions[k] = {v[0] / n, v[1] / n, v[2] / n};
        }
        ds.weights.assign(count, 4.0 * M_PI / count);
    } else {
        throw std::invalid_argument("direction set dimension must be 2 or 3");
    }
    return ds;
}

FiltrationGrid::FiltrationGrid(double T_, int steps_) : T(T_), steps(steps_) {
    if (steps_ < 2) throw std::invalid_argument("filtration grid needs >= 2 steps");
    if (!(T_ > 0)) throw std::invalid_argument("filtration span must be positive");
    dt = T_ / (steps_ - 1);
}

LevelGrid LevelGrid::uniform(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("level grid needs >= 1 level");
    LevelGrid g;
    if (count == 1) {
        g.levels = {lo};
        g.ds = hi - lo;
        return g;
    }
    g.ds = (hi - lo) / (count - 1);
    g.levels.resize(count);
    for (int k = 0; k < count; ++k) g.levels[k] = lo + k * g.ds;
    return g;
}

LevelGrid LevelGrid::covering(const GrayscaleImage& img, int count) {
    double lo = std::min(0.0, img.min_value());
    double hi = std::max(0.0, img.max_value());
    if (hi == lo) hi = lo + 1.0;
    return uniform(lo, hi, count);
}

} // namespace ertkit
