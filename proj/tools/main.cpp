#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "mshybrid/coupling.hpp"
#include "mshybrid/fem1d.hpp"
#include "mshybrid/fem2d.hpp"
#include "mshybrid/net.hpp"
#include "mshybrid/problem.hpp"
#include "mshybrid/train.hpp"
#include "mshybrid/upscale.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Settings used in the experiments for the standard oscillation scales.
void apply_eps_defaults(msh::TrainConfig& cfg, std::vector<int>& widths) {
    const double e = cfg.eps;
    auto close = [&](double v) { return std::abs(e - v) < 1e-12; };
    if (close(1.0 / 16.0)) {
        cfg.M = 280; cfg.tau2 = 10.0; cfg.N_h = 50; widths = {100, 100};
    } else if (close(1.0 / 48.0)) {
        cfg.M = 840; cfg.tau2 = 1000.0; cfg.N_h = 50; widths = {100, 100};
    } else if (close(1.0 / 64.0)) {
        cfg.M = 1000; cfg.tau2 = 1200.0; cfg.N_h = 70; widths = {150, 150};
    } else {
        cfg.M = std::max(200, int(std::lround(16.0 / e)));
        cfg.tau2 = 10.0; cfg.N_h = 50; widths = {100, 100};
    }
}

struct CliOptions {
    std::string mode;
    std::string config_path;
    std::string out_dir = ".";
    long seed = -1;
    double eps = -1.0;
};

json config_to_json(const msh::TrainConfig& cfg) {
    json j;
    j["eps"] = cfg.eps;
    j["tau1"] = cfg.tau1;
    j["tau2"] = cfg.tau2;
    j["M"] = cfg.M;
    j["N_h"] = cfg.N_h;
    j["it_max"] = cfg.it_max;
    j["tol"] = cfg.tol;
    j["lr0"] = cfg.lr0;
    j["lr_decay"] = cfg.lr_decay;
    j["lr_step"] = cfg.lr_step;
    j["seed"] = cfg.seed;
    j["kappa_min"] = cfg.kappa_min;
    j["log_every"] = cfg.log_every;
    j["N_ref"] = cfg.N_ref;
    j["hidden_widths"] = cfg.arch.hidden_widths;
    j["num_features"] = cfg.arch.num_features;
    return j;
}

void write_history_csv(const fs::path& path, const std::vector<msh::HistoryRow>& history) {
    std::ofstream out(path);
    out << "it,lr,residual_loss,coupling_loss,rel_l2,k_tilde,fallback\n";
    for (const auto& row : history)
        out << row.it << ',' << fmt(row.lr) << ',' << fmt(row.residual) << ','
            << fmt(row.coupling) << ',' << fmt(row.rel_l2) << ',' << fmt(row.ktilde) << ','
            << (row.fallback ? 1 : 0) << '\n';
}

void write_solution_csv(const fs::path& path, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& pred, const Eigen::VectorXd& ref) {
    std::ofstream out(path);
    out << "x,u_pred,u_ref\n";
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out << fmt(x(i)) << ',' << fmt(pred(i)) << ',' << fmt(ref(i)) << '\n';
}

void write_manifest(const fs::path& out_dir, const std::string& mode, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& outputs,
                    double wall_seconds, const json& summary) {
    json j;
    j["mode"] = mode;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    j["summary"] = summary;
    std::ofstream(out_dir / "manifest.json") << j.dump(2) << '\n';
}

int run_train_mode(const CliOptions& opt, const json& cfg_json) {
    msh::TrainConfig cfg;
    std::vector<int> widths;
    cfg.eps = opt.eps > 0.0 ? opt.eps : cfg_json.value("eps", 1.0 / 16.0);
    apply_eps_defaults(cfg, widths);

    if (opt.mode == "hybrid") {
        cfg.mode = msh::TrainMode::hybrid;
        cfg.it_max = 30000;
    } else if (opt.mode == "pinn") {
        cfg.mode = msh::TrainMode::pinn;
        cfg.it_max = 30000;
    } else {
        cfg.mode = msh::TrainMode::vpinn_schedule;
        cfg.it_max = 15000;
        widths = {100, 100};
    }

    cfg.tau2 = cfg_json.value("tau2", cfg.tau2);
    cfg.M = cfg_json.value("M", cfg.M);
    cfg.N_h = cfg_json.value("N_h", cfg.N_h);
    cfg.it_max = cfg_json.value("it_max", cfg.it_max);
    cfg.tol = cfg_json.value("tol", cfg.tol);
    cfg.lr0 = cfg_json.value("lr0", cfg.lr0);
    cfg.lr_decay = cfg_json.value("lr_decay", cfg.lr_decay);
    cfg.lr_step = cfg_json.value("lr_step", cfg.lr_step);
    cfg.kappa_min = cfg_json.value("kappa_min", cfg.kappa_min);
    cfg.log_every = cfg_json.value("log_every", cfg.log_every);
    cfg.N_ref = cfg_json.value("N_ref", cfg.N_ref);
    if (cfg_json.contains("hidden_widths")) widths = cfg_json["hidden_widths"].get<std::vector<int>>();
    cfg.seed = opt.seed >= 0 ? std::uint64_t(opt.seed) : cfg_json.value("seed", std::uint64_t(0));

    const bool vanilla = opt.mode == "v-pinn" || cfg_json.value("vanilla", false);
    cfg.arch = vanilla ? msh::vanilla_architecture(widths)
                       : msh::feature_architecture(widths, cfg.eps);

    const auto t0 = std::chrono::steady_clock::now();
    const msh::TrainResult result = msh::run_training(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path out(opt.out_dir);
    write_history_csv(out / "history.csv", result.history);

    const msh::FineProblem1D problem(cfg.eps);
    const Eigen::VectorXd x = msh::fine_reference_nodes(cfg.N_ref);
    const Eigen::VectorXd u_ref = msh::fine_reference(problem, cfg.N_ref);
    msh::BatchTape tape(result.params, x);
    tape.forward(result.params);
    write_solution_csv(out / "solution.csv", x, tape.value().matrix(), u_ref);

    json summary;
    summary["final_rel_l2"] = result.final_rel_l2;
    summary["final_k_tilde"] = result.final_ktilde;
    summary["iterations"] = result.iterations;
    summary["hit_tolerance"] = result.hit_tolerance;
    write_manifest(out, opt.mode, config_to_json(cfg), cfg.seed,
                   {"history.csv", "solution.csv"}, wall, summary);
    std::cout << "final rel_l2 = " << result.final_rel_l2
              << ", k_tilde = " << result.final_ktilde << '\n';
    return 0;
}

int run_fem_ref(const CliOptions& opt, const json& cfg_json) {
    const double eps = opt.eps > 0.0 ? opt.eps : cfg_json.value("eps", 1.0 / 16.0);
    const int N_ref = cfg_json.value("N_ref", 999);
    const msh::FineProblem1D problem(eps);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd u = msh::fine_reference(problem, N_ref);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Eigen::VectorXd x = msh::fine_reference_nodes(N_ref);

    const fs::path out(opt.out_dir);
    write_solution_csv(out / "solution.csv", x, u, u);
    json summary;
    summary["nodes"] = int(u.size());
    json cfg;
    cfg["eps"] = eps;
    cfg["N_ref"] = N_ref;
    write_manifest(out, opt.mode, cfg, 0, {"solution.csv"}, wall, summary);
    std::cout << "wrote " << u.size() << " nodes\n";
    return 0;
}

int run_upscale1d(const CliOptions& opt, const json& cfg_json) {
    const double eps = opt.eps > 0.0 ? opt.eps : cfg_json.value("eps", 1.0 / 16.0);
    const int N_ref = cfg_json.value("N_ref", 999);
    const msh::FineProblem1D problem(eps);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd u = msh::fine_reference(problem, N_ref);
    const double kt = msh::upscale_1d_from_fem(u, problem);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json result;
    result["eps"] = eps;
    result["k_tilde"] = kt;
    result["coeff_mean"] = msh::coeff_1d_mean(eps);
    const fs::path out(opt.out_dir);
    std::ofstream(out / "upscale1d.json") << result.dump(2) << '\n';
    json cfg;
    cfg["eps"] = eps;
    cfg["N_ref"] = N_ref;
    write_manifest(out, opt.mode, cfg, 0, {"upscale1d.json"}, wall, result);
    std::cout << "k_tilde = " << kt << '\n';
    return 0;
}

int run_upscale2d(const CliOptions& opt, const json& cfg_json) {
    const std::string which = cfg_json.value("coeff", "K1");
    msh::FineProblem2D problem;
    if (which == "K1") problem.which = msh::Coeff2D::K1;
    else if (which == "K2") problem.which = msh::Coeff2D::K2;
    else if (which == "K3") problem.which = msh::Coeff2D::K3;
    else {
        std::cerr << "unknown 2D coefficient: " << which << " (use K1|K2|K3)\n";
        return 2;
    }
    const int default_nc = int(std::lround(16.0 / problem.min_scale()));
    const int Nc = cfg_json.value("Nc", default_nc);
    const int blocks_per_side = cfg_json.value("blocks_per_side", 1);
    if (Nc < 1 || blocks_per_side < 1 || Nc % blocks_per_side != 0) {
        std::cerr << "Nc must be a positive multiple of blocks_per_side\n";
        return 2;
    }

    const msh::Grid2D grid(Nc);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd w1 = msh::solve_fine_2d(problem, 1, grid);
    const Eigen::VectorXd w2 = msh::solve_fine_2d(problem, 2, grid);

    std::vector<msh::BlockRect> blocks;
    const int bc = Nc / blocks_per_side;
    for (int bj = 0; bj < blocks_per_side; ++bj)
        for (int bi = 0; bi < blocks_per_side; ++bi)
            blocks.push_back({bi * bc, bj * bc, bc, bc});

    const auto tensors = msh::upscale_2d(w1, w2, problem, grid, blocks);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json arr = json::array();
    for (const auto& t : tensors) {
        json rec;
        rec["block_id"] = t.block_id;
        rec["valid"] = t.valid;
        rec["coercive"] = t.coercive;
        if (t.valid) {
            rec["k11"] = t.K(0, 0);
            rec["k12"] = t.K(0, 1);
            rec["k21"] = t.K(1, 0);
            rec["k22"] = t.K(1, 1);
        }
        arr.push_back(rec);
    }
    const fs::path out(opt.out_dir);
    std::ofstream(out / "tensors.json") << arr.dump(2) << '\n';
    json cfg;
    cfg["coeff"] = which;
    cfg["Nc"] = Nc;
    cfg["blocks_per_side"] = blocks_per_side;
    json summary;
    summary["num_blocks"] = int(tensors.size());
    write_manifest(out, opt.mode, cfg, 0, {"tensors.json"}, wall, summary);
    if (!tensors.empty() && tensors.front().valid)
        std::cout << "block 0 tensor: [[" << tensors[0].K(0, 0) << ", " << tensors[0].K(0, 1)
                  << "], [" << tensors[0].K(1, 0) << ", " << tensors[0].K(1, 1) << "]]\n";
    return 0;
}

int run_gradcheck(const CliOptions& opt) {
    // tiny coupled instance; central FD of the reduced loss vs assembled gradient
    msh::TrainConfig cfg;
    cfg.eps = 0.25;
    cfg.tau2 = 10.0;
    cfg.M = 32;
    cfg.N_h = 10;
    cfg.arch = msh::feature_architecture({8}, cfg.eps);
    cfg.seed = opt.seed >= 0 ? std::uint64_t(opt.seed) : 7;

    const msh::FineProblem1D problem(cfg.eps);
    const msh::Mesh1D mesh(cfg.N_h);
    const msh::CompressionSpec spec = msh::make_compression(mesh, cfg.eps);
    msh::CoarseSystem coarse(mesh, [&](double x) { return problem.source_q(x); });

    msh::NetParams params = msh::init_glorot(cfg.arch, cfg.seed);
    Eigen::VectorXd theta = params.flatten();
    msh::BatchTape colloc(params, msh::collocation_midpoints(cfg.M));
    msh::BatchTape nodes(params, mesh.nodes());

    auto reduced = [&](const Eigen::VectorXd& th) {
        msh::NetParams p = params;
        p.unflatten(th);
        colloc.forward(p);
        nodes.forward(p);
        const double kt = msh::upscale_1d_from_net(colloc, problem);
        coarse.solve_state(kt);
        const Eigen::VectorXd Qv = msh::compress(nodes.value().matrix(), spec);
        return msh::residual_loss(colloc, problem)
               + cfg.tau2 * msh::coupling_loss(Qv, coarse.y_h, mesh.h);
    };

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 0.05);
    double worst = 0.0;
    int done = 0;
    while (done < 5) {
        Eigen::VectorXd th = theta;
        for (Eigen::Index i = 0; i < th.size(); ++i) th(i) += gauss(rng);
        msh::NetParams p = params;
        p.unflatten(th);
        colloc.forward(p);
        nodes.forward(p);
        const double kt = msh::upscale_1d_from_net(colloc, problem);
        if (!(kt > 0.05)) continue;
        ++done;
        coarse.solve_state(kt);
        bool fb = false;
        const Eigen::VectorXd grad = msh::total_gradient(colloc, nodes, problem, coarse, spec,
                                                         cfg.tau2, kt, cfg.kappa_min, &fb);
        const double step = 1e-5;
        for (Eigen::Index k = 0; k < th.size(); k += std::max<Eigen::Index>(1, th.size() / 40)) {
            Eigen::VectorXd tp = th, tm = th;
            tp(k) += step;
            tm(k) -= step;
            const double fd = (reduced(tp) - reduced(tm)) / (2.0 * step);
            const double denom = std::max(std::abs(fd), 1e-8);
            worst = std::max(worst, std::abs(fd - grad(k)) / denom);
        }
    }
    std::cout << "max relative gradient error: " << worst << '\n';
    return worst < 1e-4 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("MS_HYBRID_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    CLI::App app{"Hybrid multiscale PINN/FEM experiment runner"};
    CliOptions opt;
    app.add_option("--mode", opt.mode, "hybrid|pinn|v-pinn|fem-ref|upscale1d|upscale2d|gradcheck")
        ->required();
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--seed", opt.seed, "RNG seed override");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--epsilon", opt.eps, "oscillation scale override");
    CLI11_PARSE(app, argc, argv);

    json cfg_json = json::object();
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) {
            std::cerr << "cannot open config: " << opt.config_path << '\n';
            return 2;
        }
        try {
            in >> cfg_json;
        } catch (const std::exception& e) {
            std::cerr << "config parse error: " << e.what() << '\n';
            return 2;
        }
    }

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);

    try {
        if (opt.mode == "hybrid" || opt.mode == "pinn" || opt.mode == "v-pinn")
            return run_train_mode(opt, cfg_json);
        if (opt.mode == "fem-ref") return run_fem_ref(opt, cfg_json);
        if (opt.mode == "upscale1d") return run_upscale1d(opt, cfg_json);
        if (opt.mode == "upscale2d") return run_upscale2d(opt, cfg_json);
        if (opt.mode == "gradcheck") return run_gradcheck(opt);
        std::cerr << "unknown mode: " << opt.mode << '\n' << app.help();
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
