// hdgdd: convergence studies and Schwarz preconditioner comparisons for the hybrid dG Stokes solver.
//
//   hdgdd converge --case curl_trig --bc tvnf --eps 1 --n0 8 --levels 4
//   hdgdd precond --case bubble --bc nvtf --n 64 --parts uniform:2x2 --precond ras,mras-tvnf,mras-nvtf
//   hdgdd info --domain unit_square --n 250
//   hdgdd solve --case bubble --bc nvtf --n 16 --out solution.csv
//
// Options may also come from a key=value file given with --config; flags take precedence.
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include "hdgdd/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int run(hdgdd::RunConfig& cfg)
{
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) throw hdgdd::InvalidArgument("cannot write '" + cfg.out + "'");
        out = &file;
    }
    if (cfg.command == "converge") {
        hdgdd::run_converge(cfg, out);
    } else if (cfg.command == "precond") {
        hdgdd::run_precond(cfg, out);
    } else if (cfg.command == "info") {
        hdgdd::run_info(cfg, out);
    } else {
        hdgdd::run_solve(cfg, *out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid dG Stokes solver with RAS/MRAS Schwarz preconditioners"};
    app.set_config("--config", "", "key=value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    hdgdd::RunConfig cfg;
    std::string bc = "nvtf", mras_assembly = "restricted";
    std::vector<std::string> precond{"ras"};
    app.add_option("--case", cfg.case_name, "curl_trig | bubble | poiseuille | linear")->capture_default_str();
    app.add_option("--bc", bc, "tvnf | nvtf")->capture_default_str();
    app.add_option("--eps", cfg.eps, "-1 (symmetric) or 1")->capture_default_str();
    app.add_option("--tau", cfg.tau, "stabilisation parameter")->capture_default_str();
    app.add_option("--nu", cfg.nu, "viscosity")->capture_default_str();
    app.add_option("--domain", cfg.domain, "unit_square | t_shape")->capture_default_str();
    app.add_option("--n", cfg.n, "subdivisions per unit length")->capture_default_str();
    app.add_option("--n0", cfg.n0, "coarsest mesh of a convergence study")->capture_default_str();
    app.add_option("--levels", cfg.levels, "refinement levels")->capture_default_str();
    app.add_option("--parts", cfg.parts, "uniform:PXxPY | bisect:N | file:PATH")->capture_default_str();
    app.add_option("--overlap", cfg.overlap, "overlap layers")->capture_default_str();
    app.add_option("--mras-assembly", mras_assembly, "restricted | local")->capture_default_str();
    app.add_option("--precond", precond, "comma list of none, ras, mras-tvnf, mras-nvtf")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--tol", cfg.tol, "GMRES tolerance on ||x - x_ref||")->capture_default_str();
    app.add_option("--max-iter", cfg.max_iter, "GMRES iteration limit")->capture_default_str();
    app.add_option("--restart", cfg.restart, "GMRES restart length (0: none)")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed of the random initial guess")->capture_default_str();
    app.add_option("--guess", cfg.guess, "random | zero")->capture_default_str();
    app.add_option("--out", cfg.out, "output file (default: stdout)");
    app.add_option("--history", cfg.history, "prefix for per-run GMRES history CSVs");

    app.add_subcommand("converge", "error norms and convergence orders over a refinement sequence");
    app.add_subcommand("precond", "GMRES iteration counts for the selected preconditioners");
    app.add_subcommand("info", "mesh and dof counts");
    app.add_subcommand("solve", "solve once and write per-triangle velocity and pressure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.bc = hdgdd::parse_boundary_kind(bc);
        cfg.preconds.clear();
        for (const auto& p : precond) cfg.preconds.push_back(hdgdd::parse_precond_kind(p));
        cfg.mras_assembly = hdgdd::parse_mras_assembly(mras_assembly);
        return run(cfg);
    } catch (const hdgdd::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const hdgdd::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const hdgdd::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const hdgdd::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}
