#include "gplab/gaussian_model.hpp"
#include "gplab/grid.hpp"
#include "gplab/io.hpp"
#include "gplab/rng.hpp"
#include "gplab/rough_path.hpp"
#include "gplab/skorohod.hpp"
#include "gplab/strato.hpp"
#include "gplab/test_function.hpp"
#include "gplab/wick.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gplab;

namespace {

constexpr const char* kVersion = "0.1.0";

using Config = std::map<std::string, std::string>;

double cfg_double(const Config& c, const std::string& key) {
    return std::stod(c.at(key));
}
long cfg_long(const Config& c, const std::string& key) {
    return std::stol(c.at(key));
}

Config defaults_for(const std::string& kind) {
    Config c{{"kind", kind},      {"model", "fbm"}, {"H", "0.5"},  {"T", "1"},
             {"d", "1"},          {"n", "128"},     {"levels", "4"}, {"N", "2"},
             {"fn", "quad_half"}, {"seed", "42"},   {"n_samples", "1000"},
             {"variant", "powers"}};
    if (kind == "sample") {
        c["n"] = "16";
        c["n_samples"] = "8";
    } else if (kind == "lift-check") {
        c["n"] = "128";
        c["N"] = "3";
        c["d"] = "2";
        c["H"] = "0.75";
    } else if (kind == "strato-check") {
        c["path"] = "poly";
        c["d"] = "2";
        c["fn"] = "prod12";
        c["n"] = "256";
        c["levels"] = "5";
    } else if (kind == "wick-check") {
        c["p"] = "1,1";
        c["fn"] = "prod12";
        c["n_configs"] = "100";
    } else if (kind == "sko-check") {
        c["n"] = "256";
        c["levels"] = "5";
        c["n_samples"] = "256";
    } else if (kind == "duality") {
        c["hermite_n"] = "0";
        c["n"] = "256";
        c["n_samples"] = "10000";
        c["fn"] = "quad_half";
    } else if (kind == "compare") {
        c["fn"] = "quad_half"; // weight g
        c["fn2"] = "cubic";    // f of the order-1 Wick split
        c["H"] = "0.4";
        c["n"] = "512";
        c["levels"] = "4";
        c["n_samples"] = "4000";
    }
    return c;
}

std::shared_ptr<const GaussianModel> make_model(const Config& c) {
    const std::string m = c.at("model");
    const double T = cfg_double(c, "T");
    const auto d = static_cast<std::size_t>(cfg_long(c, "d"));
    if (m == "fbm")
        return std::make_shared<FbmModel>(cfg_double(c, "H"), T, d);
    if (m == "flat")
        return std::make_shared<FlatModel>(0.0, T, d);
    throw std::invalid_argument("unknown model '" + m + "'");
}

std::vector<BumpFunction> default_bumps(double T, std::size_t d) {
    std::vector<BumpFunction> out;
    for (std::size_t j = 0; j < d; ++j) {
        const double c = T * (static_cast<double>(j) + 1.0) / (static_cast<double>(d) + 1.0);
        const double w = T / (2.0 * (static_cast<double>(d) + 1.0));
        out.emplace_back(c, w, T);
    }
    return out;
}

std::string breakdown_csv(const SkorohodConvergence& conv) {
    std::ostringstream out;
    out << "path_id,level,theta1,theta2,theta3,theta_tilde,total,rhs,abs_err\n";
    for (const auto& r : conv.rows)
        out << r.path_id << "," << r.level << "," << format_double(r.breakdown.theta1) << ","
            << format_double(r.breakdown.theta2) << ","
            << format_double(r.breakdown.theta3_total()) << ","
            << format_double(r.breakdown.theta_tilde) << ","
            << format_double(r.breakdown.total) << "," << format_double(r.rhs) << ","
            << format_double(r.abs_err) << "\n";
    return out.str();
}

void run_sample(const Config& c, const fs::path& dir, unsigned workers) {
    auto model = make_model(c);
    Partition part = Partition::uniform(0.0, cfg_double(c, "T"),
                                        static_cast<std::size_t>(cfg_long(c, "n")));
    const auto ns = static_cast<std::size_t>(cfg_long(c, "n_samples"));
    PathEnsemble ens = sample_ensemble(model, part, ns,
                                       static_cast<std::uint64_t>(cfg_long(c, "seed")), workers);
    std::ostringstream csv;
    csv << "sample,i,t";
    for (std::size_t k = 1; k <= model->dimension(); ++k)
        csv << ",x_" << k;
    csv << "\n";
    for (std::size_t s = 0; s < ens.n_samples; ++s)
        for (std::size_t i = 0; i < part.size(); ++i) {
            csv << s << "," << i << "," << format_double(part[i]);
            for (std::size_t k = 0; k < model->dimension(); ++k)
                csv << "," << format_double(ens.paths[s].coord(i, k));
            csv << "\n";
        }
    write_text_file((dir / "ensemble.csv").string(), csv.str());
    json side{{"model", c.at("model")}, {"H", cfg_double(c, "H")}, {"T", cfg_double(c, "T")},
              {"d", cfg_long(c, "d")},  {"seed", cfg_long(c, "seed")}, {"n", cfg_long(c, "n")},
              {"n_samples", cfg_long(c, "n_samples")}};
    write_text_file((dir / "ensemble.json").string(), side.dump(2) + "\n");
}

void run_lift_check(const Config& c, const fs::path& dir) {
    auto model = make_model(c);
    Partition part = Partition::uniform(0.0, cfg_double(c, "T"),
                                        static_cast<std::size_t>(cfg_long(c, "n")));
    PathSampler sampler(model, part, static_cast<std::uint64_t>(cfg_long(c, "seed")));
    const GridPath path = sampler.sample(0);
    const int N = static_cast<int>(cfg_long(c, "N"));
    RoughLift lift = lift_piecewise_linear(path, N, PairMode::All);
    const auto mult = check_multiplicativity(lift);
    const auto geom = N >= 2 ? check_geometricity(lift) : IdentityResidualReport{};
    const auto profile = holder_profile(lift);
    json rep;
    rep["multiplicativity"] = {{"max_abs", mult.max_abs}, {"max_rel", mult.max_rel}};
    rep["geometricity"] = {{"max_abs", geom.max_abs}, {"max_rel", geom.max_rel}};
    for (const auto& est : profile)
        rep["holder_profile"].push_back(
            {{"exponent", est.exponent}, {"norm", est.norm}, {"pairs_used", est.pairs_used}});
    write_text_file((dir / "lift_report.json").string(), rep.dump(2) + "\n");
    write_text_file((dir / "lift.json").string(), lift_to_json(lift) + "\n");
}

GridPath smooth_poly_path(const Partition& part, std::size_t d) {
    // x(t) = (t, t^2, ..., t^d)
    return GridPath::from_function(part, d, [d](double t, std::span<double> out) {
        double v = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            v *= t;
            out[k] = v;
        }
    });
}

void run_strato_check(const Config& c, const fs::path& dir) {
    const auto d = static_cast<std::size_t>(cfg_long(c, "d"));
    const int levels = static_cast<int>(cfg_long(c, "levels"));
    const int N = static_cast<int>(cfg_long(c, "N"));
    const auto n = static_cast<std::size_t>(cfg_long(c, "n"));
    const TestFunction f = make_test_function(c.at("fn"), d);
    Partition fine = Partition::uniform(0.0, cfg_double(c, "T"), n);

    GridPath path(fine, d);
    const std::string kind = c.count("path") ? c.at("path") : "poly";
    if (kind == "poly") {
        // piecewise-linear fixture through polynomial nodes of the coarsest grid,
        // so polynomial f stays exact at every refinement level
        Partition base = fine.coarsen(std::size_t{1} << levels);
        GridPath nodes = smooth_poly_path(base, d);
        path = GridPath::from_function(fine, d, [&](double t, std::span<double> out) {
            nodes.interpolate(t, out);
        });
    } else if (kind == "smooth") {
        path = smooth_poly_path(fine, d);
    } else if (kind == "fbm") {
        auto model = make_model(c);
        PathSampler sampler(model, fine, static_cast<std::uint64_t>(cfg_long(c, "seed")));
        path = sampler.sample(0);
    } else {
        throw std::invalid_argument("unknown path fixture '" + kind + "'");
    }
    const ConvergenceTable table = change_of_variable_residual(
        f, path, levels, N, strato_variant_from_string(c.at("variant")));
    write_text_file((dir / "convergence.csv").string(), to_csv_full(table));
    json rep{{"final_abs_err", table.final_abs_err()},
             {"observed_order", table.exact ? json("exact") : json(table.observed_order)},
             {"ref", table.extrapolated}};
    write_text_file((dir / "summary.json").string(), rep.dump(2) + "\n");
}

std::vector<int> parse_multi_index(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(std::stoi(tok));
    if (out.empty())
        throw std::invalid_argument("empty multi-index");
    return out;
}

void run_wick_check(const Config& c, const fs::path& dir) {
    const std::vector<int> p = parse_multi_index(c.at("p"));
    const std::size_t d = p.size();
    const TestFunction f = make_test_function(c.at("fn"), d);
    const Polynomial G = to_polynomial(f);
    const auto n_configs = static_cast<std::size_t>(cfg_long(c, "n_configs"));
    StreamRng rng(static_cast<std::uint64_t>(cfg_long(c, "seed")), 0);

    double worst_dev = 0.0, worst_val = 0.0;
    for (std::size_t k = 0; k < n_configs; ++k) {
        std::vector<double> vx(d), vy(d), cxy(d), xv(d), yv(d);
        for (std::size_t j = 0; j < d; ++j) {
            vx[j] = 0.2 + rng.uniform();
            vy[j] = 0.2 + rng.uniform();
            cxy[j] = (2.0 * rng.uniform() - 1.0) * 0.9 * std::sqrt(vx[j] * vy[j]);
            xv[j] = rng.normal();
            yv[j] = rng.normal();
        }
        const WickCorrectionReport rep = wick_correction_multi(G, vx, vy, cxy, p, xv, yv);
        worst_dev = std::max(worst_dev, rep.max_coeff_dev);
        worst_val = std::max(worst_val, std::abs(rep.lhs_value - rep.rhs_value));
    }
    json rep{{"p", p},
             {"fn", c.at("fn")},
             {"n_configs", n_configs},
             {"max_coeff_dev", worst_dev},
             {"max_value_dev", worst_val}};
    write_text_file((dir / "wick_report.json").string(), rep.dump(2) + "\n");
}

void run_sko_check(const Config& c, const fs::path& dir, unsigned workers) {
    auto model = make_model(c);
    Partition fine = Partition::uniform(0.0, cfg_double(c, "T"),
                                        static_cast<std::size_t>(cfg_long(c, "n")));
    PathSampler sampler(model, fine, static_cast<std::uint64_t>(cfg_long(c, "seed")));
    const TestFunction f = make_test_function(c.at("fn"), model->dimension());
    const SkorohodConvergence conv = skorohod_convergence(
        f, sampler, static_cast<std::size_t>(cfg_long(c, "n_samples")),
        static_cast<int>(cfg_long(c, "levels")), static_cast<int>(cfg_long(c, "N")), workers);
    write_text_file((dir / "breakdown.csv").string(), breakdown_csv(conv));
    json rep;
    rep["observed_order"] = conv.observed_order;
    for (std::size_t k = 0; k < conv.median_abs_err.size(); ++k)
        rep["levels"].push_back({{"level", k},
                                 {"mesh", conv.mesh[k]},
                                 {"median_abs_err", conv.median_abs_err[k]}});
    write_text_file((dir / "summary.json").string(), rep.dump(2) + "\n");
}

void run_duality(const Config& c, const fs::path& dir, unsigned workers) {
    auto model = make_model(c);
    const double T = cfg_double(c, "T");
    Partition part = Partition::uniform(0.0, T, static_cast<std::size_t>(cfg_long(c, "n")));
    PathSampler sampler(model, part, static_cast<std::uint64_t>(cfg_long(c, "seed")));
    const TestFunction f = make_test_function(c.at("fn"), model->dimension());
    const auto bumps = default_bumps(T, model->dimension());
    const DualityReport rep = duality_check(
        f, bumps, static_cast<int>(cfg_long(c, "hermite_n")), sampler,
        static_cast<std::size_t>(cfg_long(c, "n_samples")), 0.0, T, workers);
    json out{{"lhs", rep.lhs},
             {"lhs_se", rep.lhs_se},
             {"rhs", rep.rhs},
             {"rhs_se", rep.rhs_se},
             {"z", rep.z},
             {"phi_norm_sq", rep.phi_norm_sq},
             {"n_samples", rep.n_samples},
             {"degenerate", rep.degenerate},
             {"hermite_n", cfg_long(c, "hermite_n")},
             {"seed", cfg_long(c, "seed")},
             {"quadrature", {{"xphi_nodes", 512}, {"rhs_rule", "trapezoid-on-grid"}}}};
    write_text_file((dir / "duality.json").string(), out.dump(2) + "\n");
}

void run_compare(const Config& c, const fs::path& dir, unsigned workers) {
    auto model = make_model(c);
    Partition fine = Partition::uniform(0.0, cfg_double(c, "T"),
                                        static_cast<std::size_t>(cfg_long(c, "n")));
    PathSampler sampler(model, fine, static_cast<std::uint64_t>(cfg_long(c, "seed")));
    const TestFunction g = make_test_function(c.at("fn"), 1);
    const TestFunction f = make_test_function(c.at("fn2"), 1);
    const WeightedSumDiagnostics diag = weighted_sum_diagnostics(
        g, f, sampler, static_cast<std::size_t>(cfg_long(c, "n_samples")),
        static_cast<int>(cfg_long(c, "levels")), workers);
    std::ostringstream csv;
    csv << "level,cells,mean_v2_one,se_v2_one,z_v2_one,var_v2_one,var_v2_one_scaled,"
           "isserlis_var_v2_one,mean_v3_scaled,ref_v3,max_split_residual\n";
    for (const auto& lev : diag.levels)
        csv << lev.level << "," << lev.cells << "," << format_double(lev.mean_v2_one) << ","
            << format_double(lev.se_v2_one) << "," << format_double(lev.z_v2_one) << ","
            << format_double(lev.var_v2_one) << "," << format_double(lev.var_v2_one_scaled)
            << "," << format_double(lev.isserlis_var_v2_one) << ","
            << format_double(lev.mean_v3_scaled) << "," << format_double(lev.ref_v3) << ","
            << format_double(lev.max_split_residual) << "\n";
    write_text_file((dir / "weighted.csv").string(), csv.str());
    json rep{{"hurst", diag.hurst}};
    write_text_file((dir / "summary.json").string(), rep.dump(2) + "\n");
}

// Rejects bad registry ids, model parameters and budgets before any output
// directory is created.
void validate(const Config& c) {
    const std::string kind = c.at("kind");
    if (kind == "wick-check") {
        const auto p = parse_multi_index(c.at("p"));
        if (p.size() > 3)
            throw std::invalid_argument("wick-check: d above 3");
        to_polynomial(make_test_function(c.at("fn"), p.size()));
        return;
    }
    make_model(c);
    if (kind == "compare") {
        make_test_function(c.at("fn"), 1);
        make_test_function(c.at("fn2"), 1);
    } else if (kind != "sample" && kind != "lift-check") {
        make_test_function(c.at("fn"), static_cast<std::size_t>(cfg_long(c, "d")));
    }
}

int run(const Config& config, const std::string& out_root, unsigned workers) {
    const std::string kind = config.at("kind");
    validate(config);
    const std::string canon = canonical_config(config);
    const std::string hash = hex64(fnv1a64(canon));
    const fs::path dir = fs::path(out_root) / (kind + "-" + hash);
    if (fs::exists(dir))
        throw std::runtime_error("run directory exists: " + dir.string());
    fs::create_directories(dir);

    if (kind == "sample")
        run_sample(config, dir, workers);
    else if (kind == "lift-check")
        run_lift_check(config, dir);
    else if (kind == "strato-check")
        run_strato_check(config, dir);
    else if (kind == "wick-check")
        run_wick_check(config, dir);
    else if (kind == "sko-check")
        run_sko_check(config, dir, workers);
    else if (kind == "duality")
        run_duality(config, dir, workers);
    else if (kind == "compare")
        run_compare(config, dir, workers);
    else
        throw std::invalid_argument("unknown kind '" + kind + "'");

    json manifest;
    manifest["schema"] = 1;
    manifest["kind"] = kind;
    manifest["library_version"] = kVersion;
    manifest["config"] = config;
    manifest["config_hash"] = hash;
    write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riemann-sum laboratory for Stratonovich and Skorohod calculus of "
                 "Gaussian processes"};
    std::string config_path, out_root = "runs", kind;
    unsigned workers = 1;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--out", out_root, "output root directory");
    app.add_option("--workers", workers,
                   "worker threads (execution parameter; not part of the config hash)");
    app.add_option("--kind", kind,
                   "experiment kind: sample | lift-check | strato-check | wick-check | "
                   "sko-check | duality | compare");
    app.add_option("--set", overrides, "extra key=value overrides")->expected(-1);
    // common single-value overrides
    std::map<std::string, std::string> flat;
    for (const char* key : {"seed", "H", "T", "d", "n", "N", "levels", "n-samples", "fn",
                            "fn2", "variant", "model", "p", "path", "hermite-n",
                            "n-configs"}) {
        flat[key] = "";
        std::string opt = std::string("--") + key;
        app.add_option(opt, flat[key]);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        Config file_cfg;
        if (!config_path.empty())
            file_cfg = parse_config_file(config_path);
        std::string resolved_kind = kind;
        if (resolved_kind.empty() && file_cfg.count("kind"))
            resolved_kind = file_cfg.at("kind");
        if (resolved_kind.empty())
            throw std::invalid_argument("no experiment kind given (use --kind or config)");

        Config config = defaults_for(resolved_kind);
        for (const auto& [k, v] : file_cfg)
            config[k] = v;
        for (const auto& [k, v] : flat) {
            if (v.empty())
                continue;
            std::string key = k;
            for (auto& ch : key)
                if (ch == '-')
                    ch = '_';
            config[key] = v;
        }
        for (const auto& kvs : overrides) {
            const auto eq = kvs.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("override without '=': " + kvs);
            config[kvs.substr(0, eq)] = kvs.substr(eq + 1);
        }
        config["kind"] = resolved_kind;
        return run(config, out_root, workers);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
