#ifndef HDGDD_EXPERIMENTS_HPP
#define HDGDD_EXPERIMENTS_HPP

#include "hdgdd/error_norms.hpp"
#include "hdgdd/errors.hpp"
#include "hdgdd/exact.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/gmres.hpp"
#include "hdgdd/lu.hpp"
#include "hdgdd/mesh.hpp"
#include "hdgdd/schwarz.hpp"
#include "hdgdd/system.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hdgdd {

struct RunConfig {
    std::string command;
    std::string case_name = "bubble";
    BoundaryKind bc = BoundaryKind::NVTF;
    int eps = -1;
    double tau = 6.0;
    double nu = 1.0;
    std::string domain = "unit_square";
    int n = 8;
    int n0 = 8;
    int levels = 4;
    std::string parts = "uniform:2x2";
    int overlap = 1;
    MrasAssembly mras_assembly = MrasAssembly::restricted;
    std::vector<PrecondKind> preconds{PrecondKind::ras};
    double tol = 1e-6;
    int max_iter = 1000;
    int restart = 0;
    std::uint64_t seed = 1;
    std::string guess = "random";
    std::string out;
    std::string history;

    StokesParams params() const { return {nu, tau, eps, bc}; }
};

namespace detail {

// Shortest text that reads back to the same double.
inline std::string shortest(double v)
{
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

} // namespace detail

/// Space-separated key=value rendering of every field, used as the CSV header comment.
inline std::string describe(const RunConfig& c)
{
    std::ostringstream s;
    s << "hdgdd " << c.command << " case=" << c.case_name << " bc=" << to_string(c.bc) << " eps=" << c.eps
      << " tau=" << detail::shortest(c.tau) << " nu=" << detail::shortest(c.nu) << " domain=" << c.domain << " n=" << c.n << " n0=" << c.n0
      << " levels=" << c.levels << " parts=" << c.parts << " overlap=" << c.overlap
      << " mras_assembly=" << to_string(c.mras_assembly) << " precond=";
    for (std::size_t i = 0; i < c.preconds.size(); ++i) s << (i ? "," : "") << to_string(c.preconds[i]);
    s << " tol=" << detail::shortest(c.tol) << " max_iter=" << c.max_iter << " restart=" << c.restart << " seed=" << c.seed
      << " guess=" << c.guess;
    return s.str();
}

/// Rejects invalid combinations before any work is done.
inline void validate(const RunConfig& c)
{
    if (!(c.nu > 0.0)) throw InvalidArgument("nu must be positive");
    if (!(c.tau > 0.0)) throw InvalidArgument("tau must be positive");
    if (c.eps != -1 && c.eps != 1) throw InvalidArgument("eps must be -1 or 1");
    if (c.n < 1 || c.n0 < 1) throw InvalidArgument("mesh subdivisions must be at least 1");
    if (c.levels < 1) throw InvalidArgument("levels must be at least 1");
    if (c.overlap < 1) throw InvalidArgument("overlap must be at least 1");
    if (!(c.tol > 0.0)) throw InvalidArgument("tol must be positive");
    if (c.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
    if (c.restart < 0) throw InvalidArgument("restart must be non-negative");
    if (c.guess != "random" && c.guess != "zero") throw InvalidArgument("guess must be random or zero");
    const Domain domain = parse_domain(c.domain);
    if (c.command == "converge" || c.command == "precond" || c.command == "solve") {
        if (domain != Domain::unit_square)
            throw InvalidArgument(c.command + " supports the unit square only; the T-shaped Poiseuille problem "
                                  "needs mixed Dirichlet/TVNF conditions, which are not implemented");
        catalogue(c.case_name, c.nu, c.bc);
        if (!compatible(c.case_name, c.bc))
            throw InvalidArgument("case " + c.case_name + " is incompatible with " + to_string(c.bc) +
                                 " boundary conditions");
    }
}

/// "uniform:PXxPY", "bisect:N" or "file:PATH".
inline Partition make_partition(const Triangulation& mesh, const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw InvalidArgument("partition spec '" + spec + "' lacks a ':'");
    const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    try {
        if (kind == "uniform") {
            const auto x = arg.find('x');
            if (x == std::string::npos) throw InvalidArgument("uniform partition expects PXxPY");
            std::size_t p1 = 0, p2 = 0;
            const int px = std::stoi(arg.substr(0, x), &p1), py = std::stoi(arg.substr(x + 1), &p2);
            if (p1 != x || p2 != arg.size() - x - 1) throw InvalidArgument("uniform partition expects PXxPY");
            return partition_uniform(mesh, px, py);
        }
        if (kind == "bisect") {
            std::size_t p = 0;
            const int n = std::stoi(arg, &p);
            if (p != arg.size()) throw InvalidArgument("bisect expects an integer");
            return partition_bisect(mesh, n);
        }
    } catch (const std::logic_error&) {
        throw InvalidArgument("malformed partition spec '" + spec + "'");
    }
    if (kind == "file") return read_partition(arg, mesh);
    throw InvalidArgument("unknown partition strategy '" + kind + "'");
}

struct ConvergenceResult {
    std::vector<ErrorReport> levels;
    std::vector<double> eoc_energy, eoc_h, eoc_l2_u;
    /// max over levels of max_K |div u_h| / ||u_h||.
    double max_divergence_ratio = 0.0;
};

inline std::vector<double> solve_direct(const AssembledSystem& sys) { return lu_factor(sys.A).solve(sys.rhs); }

inline ConvergenceResult run_converge(const RunConfig& cfg, std::ostream* csv = nullptr)
{
    validate(cfg);
    const ExactSolution ex = catalogue(cfg.case_name, cfg.nu, cfg.bc);
    const ProblemData data = manufactured_data(ex);
    ConvergenceResult res;
    for (int l = 0; l < cfg.levels; ++l) {
        // Same triangulation as l uniform refinements of level 0, with a lattice vertex
        // numbering that keeps the direct solver's fill low.
        const Triangulation mesh = generate(Domain::unit_square, cfg.n0 << l);
        const DofMap dofs(mesh, cfg.bc);
        const AssembledSystem sys = assemble(mesh, dofs, cfg.params(), data);
        const auto x = solve_direct(sys);
        res.levels.push_back(error_norms(mesh, dofs, cfg.params(), x, ex));
        const double norm = velocity_l2(mesh, dofs, x);
        if (norm > 0.0) res.max_divergence_ratio = std::max(res.max_divergence_ratio, max_divergence(mesh, dofs, x) / norm);
    }
    std::vector<double> h, ee, eh, eu;
    for (const auto& r : res.levels) {
        h.push_back(r.h);
        ee.push_back(r.err_energy);
        eh.push_back(r.err_h);
        eu.push_back(r.err_l2_u);
    }
    res.eoc_energy = eoc(h, ee);
    res.eoc_h = eoc(h, eh);
    res.eoc_l2_u = eoc(h, eu);

    if (csv) {
        std::ostream& o = *csv;
        o << "# " << describe(cfg) << '\n';
        o << "h,err_energy,err_h,err_l2_u,err_l2_p,eoc_energy,eoc_l2_u,eoc_h\n";
        o << std::setprecision(10);
        for (std::size_t l = 0; l < res.levels.size(); ++l) {
            const auto& r = res.levels[l];
            o << r.h << ',' << r.err_energy << ',' << r.err_h << ',' << r.err_l2_u << ',' << r.err_l2_p << ','
              << res.eoc_energy[l] << ',' << res.eoc_l2_u[l] << ',' << res.eoc_h[l] << '\n';
        }
    }
    return res;
}

struct PrecondRun {
    PrecondKind kind = PrecondKind::none;
    int n_parts = 1;
    KrylovReport report;
};

inline std::vector<double> initial_guess(const RunConfig& cfg, int n)
{
    std::vector<double> x0(n, 0.0);
    if (cfg.guess == "random") {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (double& v : x0) v = U(rng);
    }
    return x0;
}

/**
 * Assembles once, solves directly for the reference, then runs GMRES with every requested
 * preconditioner and the error-vs-reference stopping rule.
 */
inline std::vector<PrecondRun> run_precond(const RunConfig& cfg, std::ostream* csv = nullptr)
{
    validate(cfg);
    if (cfg.preconds.empty()) throw InvalidArgument("no preconditioner selected");
    const ExactSolution ex = catalogue(cfg.case_name, cfg.nu, cfg.bc);
    const Triangulation mesh = generate(Domain::unit_square, cfg.n);
    const DofMap dofs(mesh, cfg.bc);
    const AssembledSystem sys = assemble(mesh, dofs, cfg.params(), manufactured_data(ex));
    const auto xref = solve_direct(sys);
    const Partition part = make_partition(mesh, cfg.parts);
    const Decomposition dec = decompose(mesh, dofs, part, cfg.overlap);

    const LinearOperator A = [&sys](std::span<const double> in, std::span<double> out) { sys.A.multiply(in, out); };
    const auto x0 = initial_guess(cfg, dofs.size());
    const StopCriterion stop = StopCriterion::vs_reference(cfg.tol, xref);
    GmresOptions opt;
    opt.max_iter = cfg.max_iter;
    opt.restart = cfg.restart;

    std::vector<PrecondRun> runs;
    for (PrecondKind kind : cfg.preconds) {
        PrecondRun run;
        run.kind = kind;
        run.n_parts = kind == PrecondKind::none ? 1 : dec.n_parts;
        std::optional<SchwarzPreconditioner> P;
        if (kind == PrecondKind::ras) P = build_ras(sys.A, dec);
        if (kind == PrecondKind::mras_tvnf) P = build_mras(sys.A, mesh, dofs, cfg.params(), dec, BoundaryKind::TVNF, cfg.mras_assembly);
        if (kind == PrecondKind::mras_nvtf) P = build_mras(sys.A, mesh, dofs, cfg.params(), dec, BoundaryKind::NVTF, cfg.mras_assembly);
        run.report = gmres(A, P ? P->as_operator() : LinearOperator{}, sys.rhs, x0, stop, opt).report;
        runs.push_back(std::move(run));
        if (!cfg.history.empty()) {
            const std::string path = cfg.history + "_" + to_string(kind) + ".csv";
            std::ofstream h(path);
            if (!h) throw InvalidArgument("cannot write history file '" + path + "'");
            write_history_csv(h, runs.back().report, describe(cfg) + " kind=" + to_string(kind));
        }
    }
    if (csv) {
        std::ostream& o = *csv;
        o << "# " << describe(cfg) << " dofs=" << dofs.size() << '\n';
        o << "N,kind,iterations,converged,final_error\n";
        o << std::setprecision(10);
        for (const auto& r : runs)
            o << r.n_parts << ',' << to_string(r.kind) << ',' << r.report.iterations << ','
              << (r.report.converged ? 1 : 0) << ',' << r.report.history.back() << '\n';
    }
    return runs;
}

struct MeshInfo {
    int triangles = 0;
    int edges = 0;
    int dofs = 0;
};

inline MeshInfo run_info(const RunConfig& cfg, std::ostream* out = nullptr)
{
    validate(cfg);
    const Triangulation mesh = generate(parse_domain(cfg.domain), cfg.n);
    const DofMap dofs(mesh, cfg.bc);
    MeshInfo info{mesh.n_triangles(), mesh.n_edges(), dofs.size()};
    if (out) *out << "triangles=" << info.triangles << " edges=" << info.edges << " dofs=" << info.dofs << '\n';
    return info;
}

/// Per-triangle barycentre, velocity at the barycentre, and pressure.
inline void run_solve(const RunConfig& cfg, std::ostream& out)
{
    validate(cfg);
    const ExactSolution ex = catalogue(cfg.case_name, cfg.nu, cfg.bc);
    const Triangulation mesh = generate(Domain::unit_square, cfg.n);
    const DofMap dofs(mesh, cfg.bc);
    const AssembledSystem sys = assemble(mesh, dofs, cfg.params(), manufactured_data(ex));
    const auto x = solve_direct(sys);
    out << "# " << describe(cfg) << '\n';
    out << "x,y,u1,u2,p\n";
    out << std::setprecision(10);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementKernel k = bdm1_basis(mesh, t);
        const Point c = k.centre;
        const Point u = detail::element_velocity(k, dofs, x)(c);
        out << c.x() << ',' << c.y() << ',' << u.x() << ',' << u.y() << ',' << x[dofs.pressure(t)] << '\n';
    }
}

} // namespace hdgdd

#endif // HDGDD_EXPERIMENTS_HPP
