// ertkit command-line tool: transforms, distances, alignment, two-sample
// tests, the simulation study, the inversion demo, and SERT surface slices.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ertkit/alignment.hpp"
#include "ertkit/image.hpp"
#include "ertkit/inference.hpp"
#include "ertkit/lifted.hpp"
#include "ertkit/metrics.hpp"
#include "ertkit/radon_dual.hpp"
#include "ertkit/simulation.hpp"
#include "ertkit/transforms.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ertkit;

namespace {

struct Options {
    std::string config;
    std::string command;

    std::string input, input_b, ref, src;
    std::string group1, group2;
    std::string out = "ertkit-out";
    std::string kind = "ert";
    std::string engine = "quantized";
    std::string flavor = "avg";
    std::string family = "sert";
    std::string algorithm = "perm-chi2";
    std::string format = "csv";
    std::string plane = "xy";
    std::string profile = "smoke";
    std::string builtin = "torus";
    std::string eps_list;
    int gamma = 64;
    int delta = 64;
    int levels = 32;
    int extent = 33;
    int theta_steps = 64;
    int budget = 2048;
    int n = 30;
    int reps = 20;
    int perms = 499;
    double p = 2, q = 2;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    bool plot = false;
    bool table = false;
};

json resolved_config(const Options& o) {
    json j;
    j["command"] = o.command;
    j["out"] = o.out;
    j["gamma"] = o.gamma;
    j["delta"] = o.delta;
    j["levels"] = o.levels;
    j["seed"] = o.seed;
    if (!o.input.empty()) j["input"] = o.input;
    if (o.command == "transform") {
        j["kind"] = o.kind;
        j["engine"] = o.engine;
        j["flavor"] = o.flavor;
        j["format"] = o.format;
    } else if (o.command == "distance") {
        j["b"] = o.input_b;
        j["family"] = o.family;
        j["p"] = o.p;
        j["q"] = o.q;
        j["engine"] = o.engine;
    } else if (o.command == "align") {
        j["ref"] = o.ref;
        j["src"] = o.src;
        j["budget"] = o.budget;
    } else if (o.command == "test") {
        j["group1"] = o.group1;
        j["group2"] = o.group2;
        j["algorithm"] = o.algorithm;
        j["family"] = o.family;
        j["p"] = o.p;
        j["q"] = o.q;
        j["alpha"] = o.alpha;
        j["perms"] = o.perms;
    } else if (o.command == "simulate") {
        j["profile"] = o.profile;
        j["n"] = o.n;
        j["reps"] = o.reps;
        j["perms"] = o.perms;
        j["alpha"] = o.alpha;
        j["eps"] = o.eps_list.empty() ? "table" : o.eps_list;
        j["algorithm"] = o.algorithm;
    } else if (o.command == "surface") {
        j["plane"] = o.plane;
        j["builtin"] = o.builtin;
        j["extent"] = o.extent;
        j["theta_steps"] = o.theta_steps;
        j["plot"] = o.plot;
    }
    return j;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    os << body;
}

fs::path prepare_out(const Options& o) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    write_text(dir / "config.json", resolved_config(o).dump(2) + "\n");
    return dir;
}

GrayscaleImage load(const std::string& path) {
    GrayscaleImage img = load_image(path);
    if (!img.warning.empty()) std::cerr << "note: " << img.warning << "\n";
    return img;
}

void export_mec_csv(const MecField& m, const fs::path& path) {
    std::FILE* out = std::fopen(path.string().c_str(), "wb");
    if (!out) throw DataError("cannot write " + path.string());
    std::fputs("dir_index,t,value\n", out);
    for (int p = 0; p < m.dirs.count(); ++p)
        for (int q = 0; q < m.tgrid.steps; ++q)
            std::fprintf(out, "%d,%.17g,%.17g\n", p, m.tgrid.t(q), m.at(p, q));
    std::fclose(out);
}

int run_transform(const Options& o) {
    fs::path dir = prepare_out(o);
    GrayscaleImage img = load(o.input);
    DirectionSet dirs = make_direction_set(img.d, o.gamma);
    FiltrationGrid tgrid(2 * img.radius, o.delta);
    LevelGrid sgrid = LevelGrid::covering(img, o.levels);
    Model engine = model_from_name(o.engine);

    if (o.kind == "ect") {
        TransformField f = compute_ect(img, dirs, tgrid);
        if (o.format == "bin") export_field_binary(f, (dir / "ect.bin").string());
        else export_field_csv(f, (dir / "ect.csv").string());
    } else if (o.kind == "ert" || o.kind == "sert") {
        TransformField f = compute_ert(img, dirs, tgrid, sgrid, engine,
                                       flavor_from_name(o.flavor));
        if (o.kind == "sert") f = compute_sert(f);
        std::string stem = o.kind;
        if (o.format == "bin") export_field_binary(f, (dir / (stem + ".bin")).string());
        else export_field_csv(f, (dir / (stem + ".csv")).string());
    } else if (o.kind == "lect" || o.kind == "select" || o.kind == "mec") {
        LiftedKind lk = o.kind == "lect" ? LiftedKind::Lect : LiftedKind::Select;
        LiftedField lf = compute_lifted(img, lk, dirs, tgrid, sgrid, engine);
        if (o.kind == "mec") export_mec_csv(compute_mec(lf), dir / "mec.csv");
        else export_lifted_csv(lf, (dir / (o.kind + ".csv")).string());
    } else {
        throw std::invalid_argument("unknown transform kind: " + o.kind);
    }
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
}

int run_distance(const Options& o) {
    fs::path dir = prepare_out(o);
    GrayscaleImage a = load(o.input);
    GrayscaleImage b = load(o.input_b);
    if (a.d != b.d) throw DataError("images must share dimension");
    DirectionSet dirs = make_direction_set(a.d, o.gamma);
    double radius = std::max(a.radius, b.radius);
    a.radius = b.radius = radius;
    FiltrationGrid tgrid(2 * radius, o.delta);
    double lo = std::min({0.0, a.min_value(), b.min_value()});
    double hi = std::max({0.0, a.max_value(), b.max_value()});
    LevelGrid sgrid = LevelGrid::uniform(lo, hi == lo ? lo + 1 : hi, o.levels);
    Model engine = model_from_name(o.engine);
    DistanceFamily family = distance_family_from_name(o.family);
    DistanceSpec spec{family, o.p, o.q};

    double value = 0;
    if (family == DistanceFamily::Ert) {
        value = distance(compute_ert(a, dirs, tgrid, sgrid, engine, Flavor::Averaged),
                         compute_ert(b, dirs, tgrid, sgrid, engine, Flavor::Averaged),
                         spec);
    } else if (family == DistanceFamily::Sert) {
        value = distance(
            compute_sert(compute_ert(a, dirs, tgrid, sgrid, engine, Flavor::Averaged)),
            compute_sert(compute_ert(b, dirs, tgrid, sgrid, engine, Flavor::Averaged)),
            spec);
    } else if (family == DistanceFamily::Select) {
        value = distance(compute_lifted(a, LiftedKind::Select, dirs, tgrid, sgrid, engine),
                         compute_lifted(b, LiftedKind::Select, dirs, tgrid, sgrid, engine),
                         spec);
    } else {
        MecField ma = compute_mec(
            compute_lifted(a, LiftedKind::Select, dirs, tgrid, sgrid, engine));
        MecField mb = compute_mec(
            compute_lifted(b, LiftedKind::Select, dirs, tgrid, sgrid, engine));
        value = distance(ma, mb, spec);
    }
    json j;
    j["distance"] = value;
    j["family"] = o.family;
    j["p"] = o.p;
    j["q"] = o.q;
    write_text(dir / "distance.json", j.dump(2) + "\n");
    std::cout << value << "\n";
    return 0;
}

int run_align(const Options& o) {
    fs::path dir = prepare_out(o);
    GrayscaleImage ref_img = load(o.ref);
    GrayscaleImage src_img = load(o.src);
    if (ref_img.d != src_img.d) throw DataError("images must share dimension");
    DirectionSet dirs = make_direction_set(ref_img.d, o.gamma);
    double radius = std::max(ref_img.radius, src_img.radius);
    ref_img.radius = src_img.radius = radius;
    FiltrationGrid tgrid(2 * radius, o.delta);
    LevelGrid sgrid = LevelGrid::covering(ref_img, o.levels);

    TransformField fref = compute_ert(ref_img, dirs, tgrid, sgrid, Model::Quantized,
                                      Flavor::Averaged);
    TransformField fsrc = compute_ert(src_img, dirs, tgrid, sgrid, Model::Quantized,
                                      Flavor::Averaged);
    AlignmentResult res = align(fref, fsrc, o.budget);

    json j;
    j["scale"] = res.scale;
    j["objective"] = res.objective;
    j["rotation"] = {{res.rotation[0][0], res.rotation[0][1], res.rotation[0][2]},
                     {res.rotation[1][0], res.rotation[1][1], res.rotation[1][2]},
                     {res.rotation[2][0], res.rotation[2][1], res.rotation[2][2]}};
    write_text(dir / "alignment.json", j.dump(2) + "\n");

    // (theta, lambda) objective surface for Figure-4-style plots
    std::vector<double> thetas, lambdas;
    for (int i = 0; i < 73; ++i) thetas.push_back(-M_PI / 2 + i * (M_PI / 72));
    for (int i = 0; i < 61; ++i) lambdas.push_back(-1.5 + i * 0.05);
    auto surf = objective_surface(fref, fsrc, thetas, lambdas);
    std::string csv = "theta,lambda,objective\n";
    char line[96];
    for (std::size_t i = 0; i < thetas.size(); ++i)
        for (std::size_t j2 = 0; j2 < lambdas.size(); ++j2) {
            std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n", thetas[i],
                          lambdas[j2], surf[i * lambdas.size() + j2]);
            csv += line;
        }
    write_text(dir / "objective_surface.csv", csv);
    std::cout << "scale " << res.scale << " objective " << res.objective << "\n";
    return 0;
}

std::vector<GrayscaleImage> load_group(const std::string& dirpath) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dirpath))
        if (e.path().extension() == ".gimg") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .gimg files in " + dirpath);
    std::vector<GrayscaleImage> out;
    for (const auto& f : files) out.push_back(load(f));
    return out;
}

int run_test(const Options& o) {
    fs::path dir = prepare_out(o);
    auto g1 = load_group(o.group1);
    auto g2 = load_group(o.group2);
    if (g1.size() != g2.size()) throw DataError("groups must have equal size");
    int d = g1[0].d;
    double radius = 0;
    for (const auto* grp : {&g1, &g2})
        for (const auto& img : *grp) {
            if (img.d != d) throw DataError("images must share dimension");
            radius = std::max(radius, img.radius);
        }
    DirectionSet dirs = make_direction_set(d, o.gamma);
    FiltrationGrid tgrid(2 * radius, o.delta);
    double hi = 1.0;
    for (const auto* grp : {&g1, &g2})
        for (const auto& img : *grp) hi = std::max({hi, img.max_value(), -img.min_value()});
    LevelGrid sgrid = LevelGrid::uniform(0.0, hi, o.levels);

    auto erts = [&](const std::vector<GrayscaleImage>& grp) {
        std::vector<TransformField> out;
        for (auto img : grp) {
            img.radius = radius;
            out.push_back(compute_ert(img, dirs, tgrid, sgrid, Model::Quantized,
                                      Flavor::Averaged));
        }
        return out;
    };

    TestReport report;
    RandomStream stream(o.seed, 0);
    if (o.algorithm == "chi2" || o.algorithm == "perm-chi2") {
        SertSample s1, s2;
        for (auto& f : erts(g1)) s1.fields.push_back(compute_sert(f));
        for (auto& f : erts(g2)) s2.fields.push_back(compute_sert(f));
        report = o.algorithm == "chi2" ? chi2_test(s1, s2, o.alpha)
                                       : perm_chi2_test(s1, s2, o.alpha, o.perms, stream);
    } else if (o.algorithm == "full-perm") {
        DistanceFamily family = distance_family_from_name(o.family);
        DistanceSpec spec{family, o.p, o.q};
        if (family == DistanceFamily::Ert) {
            report = full_perm_test(erts(g1), erts(g2), o.alpha, o.perms, spec, stream);
        } else if (family == DistanceFamily::Sert) {
            std::vector<TransformField> s1, s2;
            for (auto& f : erts(g1)) s1.push_back(compute_sert(f));
            for (auto& f : erts(g2)) s2.push_back(compute_sert(f));
            report = full_perm_test(s1, s2, o.alpha, o.perms, spec, stream);
        } else {
            std::vector<LiftedField> s1, s2;
            std::vector<MecField> m1, m2;
            for (const auto* grp : {&g1, &g2})
                for (auto img : *grp) {
                    img.radius = radius;
                    LiftedField lf = compute_lifted(img, LiftedKind::Select, dirs, tgrid,
                                                    sgrid, Model::Quantized);
                    if (family == DistanceFamily::Mec)
                        (grp == &g1 ? m1 : m2).push_back(compute_mec(lf));
                    else
                        (grp == &g1 ? s1 : s2).push_back(std::move(lf));
                }
            report = family == DistanceFamily::Mec
                         ? full_perm_test(m1, m2, o.alpha, o.perms, spec, stream)
                         : full_perm_test(s1, s2, o.alpha, o.perms, spec, stream);
        }
    } else {
        throw std::invalid_argument("unknown test algorithm: " + o.algorithm);
    }
    report.seed = o.seed;
    write_text(dir / "report.json", report.to_json() + "\n");
    std::cout << report.to_json() << "\n";
    return 0;
}

int run_simulate(const Options& o) {
    fs::path dir = prepare_out(o);
    SimGrids grids;
    grids.gamma = o.gamma;
    grids.delta = o.delta;
    grids.levels = o.levels;
    grids.extent = o.profile == "smoke" ? 17 : 33;

    std::vector<SimAlgorithm> algs;
    std::map<std::string, SimAlgorithm> names{
        {"chi2", SimAlgorithm::Chi2},
        {"perm-chi2", SimAlgorithm::PermChi2},
        {"full-perm-ert", SimAlgorithm::FullPermErt},
        {"full-perm-sert", SimAlgorithm::FullPermSert},
        {"full-perm-select", SimAlgorithm::FullPermSelect},
        {"full-perm-mec", SimAlgorithm::FullPermMec}};
    if (o.algorithm == "all") {
        for (auto& [k, v] : names) algs.push_back(v);
    } else if (names.count(o.algorithm)) {
        algs.push_back(names.at(o.algorithm));
    } else {
        throw std::invalid_argument("unknown simulate algorithm: " + o.algorithm);
    }

    std::vector<double> one_minus;
    if (o.eps_list.empty() || o.table) {
        one_minus = {0.0, 0.05, 0.1, 0.125, 0.15, 0.2, 0.3};
    } else {
        std::stringstream ss(o.eps_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) one_minus.push_back(1.0 - std::stod(tok));
    }

    std::map<SimAlgorithm, std::vector<double>> table;
    std::ofstream jsonl(dir / "replicates.jsonl");
    for (double om : one_minus) {
        SimOutcome out = run_experiment(1.0 - om, o.n, o.reps, algs, grids, o.alpha,
                                        o.perms, o.seed);
        for (auto alg : algs) table[alg].push_back(out.rejection_rate.at(alg));
        for (const auto& line : out.jsonl) jsonl << line << "\n";
        std::cerr << "1-eps=" << om << " done\n";
    }

    std::string csv = "algorithm";
    for (double om : one_minus) csv += "," + std::to_string(om);
    csv += "\n";
    for (auto alg : algs) {
        csv += sim_algorithm_name(alg);
        for (double r : table[alg]) csv += "," + std::to_string(r);
        csv += "\n";
    }
    write_text(dir / "rejection_rates.csv", csv);
    std::cout << csv;
    return 0;
}

int run_invert_demo(const Options& o) {
    fs::path dir = prepare_out(o);
    GrayscaleImage img;
    if (!o.input.empty()) {
        img = load(o.input);
    } else {
        img = make_image(2, {5, 5, 1}, {0.125, 0.125, 1}, {-0.25, -0.25, 0}, 2.0);
        RandomStream stream(o.seed, 0);
        for (auto& v : img.values) v = static_cast<double>(stream.below(3)) / 2.0;
    }
    DirectionSet dirs = make_direction_set(2, o.gamma);
    FiltrationGrid tgrid(2 * img.radius, o.delta);
    std::vector<std::array<double, 3>> probes;
    for (int i = 0; i + 1 < img.extents[0]; ++i)
        for (int j = 0; j + 1 < img.extents[1]; ++j) {
            auto p = img.vertex_position(i, j);
            probes.push_back({p[0] + img.spacing[0] / 2, p[1] + img.spacing[1] / 2, 0});
        }
    InvertReport rep = invert_check(img, dirs, tgrid, probes);
    write_text(dir / "invert_report.json", rep.to_json() + "\n");
    std::cout << "max_error " << rep.max_error << "\n";
    return 0;
}

const char* kPlotScript = R"py(#!/usr/bin/env python3
# Renders the SERT surface slice CSV produced alongside this script.
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "surface.csv"
thetas, ts, vals = [], [], []
with open(path) as fh:
    for row in csv.DictReader(fh):
        thetas.append(float(row["theta"]))
        ts.append(float(row["t"]))
        vals.append(float(row["value"]))
thetas = np.array(thetas)
ts = np.array(ts)
vals = np.array(vals)
nt = len(np.unique(ts))
grid = vals.reshape(-1, nt)
fig, ax = plt.subplots(subplot_kw={"projection": "3d"})
T, TH = np.meshgrid(np.unique(ts), np.unique(thetas))
ax.plot_surface(TH, T, grid, cmap="viridis")
ax.set_xlabel("direction angle")
ax.set_ylabel("t")
ax.set_zlabel("SERT")
fig.savefig(path.replace(".csv", ".png"), dpi=150)
print("wrote", path.replace(".csv", ".png"))
)py";

int run_surface(const Options& o) {
    fs::path dir = prepare_out(o);
    GrayscaleImage img;
    if (!o.input.empty()) {
        img = load(o.input);
        if (img.d != 3) throw DataError("surface slices need a 3D image");
    } else if (o.builtin == "torus") {
        FieldRecipe recipe;
        recipe.kind = RecipeKind::TorusG;
        recipe.extent = o.extent;
        img = rasterize(recipe);
    } else {
        throw std::invalid_argument("unknown builtin field: " + o.builtin);
    }

    int plane;
    if (o.plane == "xy") plane = 0;
    else if (o.plane == "xz") plane = 1;
    else if (o.plane == "yz") plane = 2;
    else throw std::invalid_argument("plane must be xy, xz or yz");

    DirectionSet dirs;
    dirs.d = 3;
    for (int k = 0; k < o.theta_steps; ++k) {
        double a = 2.0 * M_PI * k / o.theta_steps;
        double c = std::cos(a), s = std::sin(a);
        if (plane == 0) dirs.directions.push_back({c, s, 0});
        else if (plane == 1) dirs.directions.push_back({c, 0, s});
        else dirs.directions.push_back({0, c, s});
        dirs.weights.push_back(4.0 * M_PI / o.theta_steps);
    }
    FiltrationGrid tgrid(2 * img.radius, o.delta);
    LevelGrid sgrid = LevelGrid::covering(img, o.levels);
    TransformField sert = compute_sert(
        compute_ert(img, dirs, tgrid, sgrid, Model::Quantized, Flavor::Averaged));

    std::string csv = "theta,t,value\n";
    char line[96];
    for (int p = 0; p < dirs.count(); ++p)
        for (int q = 0; q < tgrid.steps; ++q) {
            std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n",
                          2.0 * M_PI * p / o.theta_steps, tgrid.t(q), sert.at(p, q));
            csv += line;
        }
    write_text(dir / "surface.csv", csv);
    if (o.plot) write_text(dir / "plot_surface.py", kPlotScript);
    std::cout << "wrote " << (dir / "surface.csv").string() << "\n";
    return 0;
}

void apply_config_file(const CLI::App& app, Options& o) {
    if (o.config.empty()) return;
    std::ifstream is(o.config);
    if (!is) throw DataError("cannot open config " + o.config);
    json j;
    try {
        j = json::parse(is);
    } catch (const std::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    const CLI::App* sub =
        app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    auto given = [&](const char* key) {
        std::string flag = std::string("--") + key;
        try {
            return sub->count(flag) > 0;
        } catch (const CLI::OptionNotFound&) {
            return false;
        }
    };
    auto set_if_unset = [&](const char* key, auto& slot) {
        if (!j.contains(key) || given(key)) return;
        slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    set_if_unset("gamma", o.gamma);
    set_if_unset("delta", o.delta);
    set_if_unset("levels", o.levels);
    set_if_unset("extent", o.extent);
    set_if_unset("engine", o.engine);
    set_if_unset("flavor", o.flavor);
    set_if_unset("family", o.family);
    set_if_unset("alpha", o.alpha);
    set_if_unset("perms", o.perms);
    set_if_unset("n", o.n);
    set_if_unset("reps", o.reps);
    set_if_unset("seed", o.seed);
    set_if_unset("out", o.out);
    set_if_unset("budget", o.budget);
    set_if_unset("theta-steps", o.theta_steps);
    set_if_unset("profile", o.profile);
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Euler-characteristic transforms, alignment and two-sample tests for grayscale images"};
    app.require_subcommand(1);
    app.add_option("--config", o.config, "JSON config file; flags override its values");

    auto add_grid = [&o](CLI::App* cmd) {
        cmd->add_option("--gamma", o.gamma, "number of directions");
        cmd->add_option("--delta", o.delta, "filtration steps");
        cmd->add_option("--levels", o.levels, "intensity levels");
        cmd->add_option("--out", o.out, "output directory");
        cmd->add_option("--seed", o.seed, "random seed");
    };

    CLI::App* transform = app.add_subcommand("transform", "compute a transform of one image");
    transform->add_option("--input", o.input, "input image")->required();
    transform->add_option("--kind", o.kind, "ect|ert|sert|lect|select|mec");
    transform->add_option("--engine", o.engine, "quantized|multilinear");
    transform->add_option("--flavor", o.flavor, "floor|ceiling|avg");
    transform->add_option("--format", o.format, "csv|bin");
    add_grid(transform);

    CLI::App* dist = app.add_subcommand("distance", "distance between two images");
    dist->add_option("--a", o.input, "first image")->required();
    dist->add_option("--b", o.input_b, "second image")->required();
    dist->add_option("--family", o.family, "ert|sert|select|mec");
    dist->add_option("--engine", o.engine, "quantized|multilinear");
    dist->add_option("--p", o.p, "inner exponent");
    dist->add_option("--q", o.q, "outer exponent");
    add_grid(dist);

    CLI::App* al = app.add_subcommand("align", "align a source image's ERT to a reference");
    al->add_option("--ref", o.ref, "reference image")->required();
    al->add_option("--src", o.src, "source image")->required();
    al->add_option("--budget", o.budget, "rotation evaluation budget");
    add_grid(al);

    CLI::App* test = app.add_subcommand("test", "two-sample hypothesis test");
    test->add_option("--group1", o.group1, "directory of .gimg files")->required();
    test->add_option("--group2", o.group2, "directory of .gimg files")->required();
    test->add_option("--alg", o.algorithm, "chi2|perm-chi2|full-perm");
    test->add_option("--family", o.family, "distance family for full-perm");
    test->add_option("--p", o.p, "inner exponent");
    test->add_option("--q", o.q, "outer exponent");
    test->add_option("--alpha", o.alpha, "significance level");
    test->add_option("--perms", o.perms, "number of permutations");
    add_grid(test);

    CLI::App* sim = app.add_subcommand("simulate", "rejection-rate study of the random family");
    sim->add_option("--eps", o.eps_list, "comma-separated epsilon values (default: the full table)");
    sim->add_flag("--table", o.table, "run the full epsilon table");
    sim->add_option("--alg", o.algorithm, "all|chi2|perm-chi2|full-perm-{ert,sert,select,mec}");
    sim->add_option("--n", o.n, "fields per group");
    sim->add_option("--reps", o.reps, "replicates per epsilon");
    sim->add_option("--perms", o.perms, "permutations per test");
    sim->add_option("--alpha", o.alpha, "significance level");
    sim->add_option("--profile", o.profile, "smoke|desk");
    add_grid(sim);

    CLI::App* inv = app.add_subcommand("invert-demo", "desk-scale ERT inversion round-trip");
    inv->add_option("--input", o.input, "small 2D image (default: seeded random)");
    add_grid(inv);

    CLI::App* surf = app.add_subcommand("surface", "great-circle SERT slices as CSV");
    surf->add_option("--input", o.input, "3D image (default: the builtin torus field)");
    surf->add_option("--builtin", o.builtin, "builtin field name");
    surf->add_option("--plane", o.plane, "xy|xz|yz");
    surf->add_option("--extent", o.extent, "builtin raster extent");
    surf->add_option("--theta-steps", o.theta_steps, "angular resolution");
    surf->add_flag("--plot", o.plot, "emit a plotting script next to the CSV");
    add_grid(surf);

    try {
        app.parse(argc, argv);
        apply_config_file(app, o);
        if (transform->parsed()) { o.command = "transform"; return run_transform(o); }
        if (dist->parsed()) { o.command = "distance"; return run_distance(o); }
        if (al->parsed()) { o.command = "align"; return run_align(o); }
        if (test->parsed()) { o.command = "test"; return run_test(o); }
        if (sim->parsed()) { o.command = "simulate"; return run_simulate(o); }
        if (inv->parsed()) { o.command = "invert-demo"; return run_invert_demo(o); }
        if (surf->parsed()) { o.command = "surface"; return run_surface(o); }
        std::cerr << app.help();
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help
        json err;
        err["error"] = std::string(e.what());
        err["code"] = 2;
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        json err;
        err["error"] = e.what();
        err["code"] = 2;
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const DegeneracyError& e) {
        json err;
        err["error"] = e.what();
        err["code"] = 4;
        std::cerr << err.dump() << "\n";
        return 4;
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        err["code"] = 3;
        std::cerr << err.dump() << "\n";
        return 3;
    }
}
