#include "macmi/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "macmi/bayes.hpp"
#include "macmi/grad.hpp"
#include "macmi/info.hpp"
#include "macmi/quadrature.hpp"
#include "macmi/rng.hpp"
#include "macmi/version.hpp"

namespace macmi {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

struct GridPoint {
    size_t index = 0;
    bool has_p1 = false, has_p2 = false, has_snr = false;
    double p1 = 0, p2 = 0, snr = 0;
};

// axis values rescale the template precoder to the requested squared
// Frobenius norm; a zero template gets the identity direction
void rescale_power(Eigen::MatrixXcd& p, double target) {
    if (target <= 0) {
        p.setZero();
        return;
    }
    const double cur = p.squaredNorm();
    if (cur > 0)
        p *= std::sqrt(target / cur);
    else
        p = std::sqrt(target / double(p.rows())) *
            Eigen::MatrixXcd::Identity(p.rows(), p.cols());
}

MacSystem system_at(const SweepSpec& spec, const GridPoint& g) {
    MacSystem sys = spec.base;
    if (g.has_p1) rescale_power(sys.p1, g.p1);
    if (g.has_p2) rescale_power(sys.p2, g.p2);
    if (g.has_snr) sys.snr = g.snr;
    return sys;
}

struct PointCtx {
    const SweepSpec* spec = nullptr;
    GridPoint g;
    MacSystem sys;
    uint64_t seed = 0;
    int inner_workers = 1;
    double ax_p1 = 0, ax_p2 = 0, ax_snr = 0; // resolved column values
};

void require_finite(const PointCtx& c, const char* col, double v) {
    if (std::isfinite(v)) return;
    std::ostringstream os;
    os << "experiment '" << c.spec->experiment << "': non-finite " << col
       << " at grid point p1=" << c.ax_p1 << " p2=" << c.ax_p2
       << " snr=" << c.ax_snr << " (index " << c.g.index << ")";
    throw std::runtime_error(os.str());
}

// one CSV row; every numeric cell is finiteness-checked with its column
// name so a NaN aborts with usable context
class Row {
public:
    explicit Row(const PointCtx& c) : c_(c) {}
    Row& num(const char* col, double v) {
        require_finite(c_, col, v);
        sep();
        line_ += fmt(v);
        return *this;
    }
    Row& count(const char* col, uint64_t v) {
        sep();
        line_ += std::to_string(v);
        (void)col;
        return *this;
    }
    Row& text(const std::string& s) {
        sep();
        line_ += s;
        return *this;
    }
    std::string str() const { return line_ + "\n"; }

private:
    void sep() {
        if (!line_.empty()) line_ += ',';
    }
    const PointCtx& c_;
    std::string line_;
};

PosteriorStats stats_point(const PointCtx& c) {
    if (!c.spec->force_mc && c.sys.scalar()) return posterior_stats_quad(c.sys);
    return posterior_stats(c.sys, c.seed, c.spec->n_samples, c.inner_workers);
}

Row axes_row(const PointCtx& c) {
    Row r(c);
    r.num("p1", c.ax_p1).num("p2", c.ax_p2).num("snr", c.ax_snr);
    return r;
}

std::string mi_surface_point(const PointCtx& c) {
    double mi = 0, se = 0;
    if (!c.spec->force_mc && c.sys.scalar()) {
        mi = mi_quad(c.sys) / kLog2;
    } else {
        const McEstimate est = mutual_information(c.sys, c.seed,
                                                  c.spec->n_samples,
                                                  c.inner_workers);
        mi = est.value;
        se = est.std_error;
    }
    return axes_row(c).num("mi_bits", mi).num("mi_se_bits", se).str();
}

std::string mmse_surface_point(const PointCtx& c) {
    const PosteriorStats st = stats_point(c);
    return axes_row(c)
        .num("mmse_total", st.mmse_total)
        .num("mmse_total_se", st.se_mmse_total)
        .str();
}

std::string per_user_mmse_point(const PointCtx& c) {
    const PosteriorStats st = stats_point(c);
    return axes_row(c)
        .num("mmse1", st.mmse1)
        .num("mmse1_se", st.se_mmse1)
        .num("mmse2", st.mmse2)
        .num("mmse2_se", st.se_mmse2)
        .str();
}

std::string covariance_surface_point(const PointCtx& c) {
    const PosteriorStats st = stats_point(c);
    const cplx t12 =
        (c.sys.h1.adjoint() * c.sys.h2 * c.sys.p2 * st.cross21).trace();
    const cplx t21 =
        (c.sys.h2.adjoint() * c.sys.h1 * c.sys.p1 * st.cross12).trace();
    return axes_row(c)
        .num("psi", st.psi_oracle)
        .num("psi_se", st.se_psi_oracle)
        .num("coupling12_re", t12.real())
        .num("coupling12_im", t12.imag())
        .num("coupling21_re", t21.real())
        .num("coupling21_im", t21.imag())
        .str();
}

std::string immse_check_point(const PointCtx& c) {
    const ImmseReport rep =
        immse_identity_check(c.sys, {c.sys.snr}, c.spec->fd_step, c.seed,
                             c.spec->n_samples, c.inner_workers);
    return axes_row(c)
        .num("i_nats", rep.i_values[0].value)
        .num("i_se_nats", rep.i_values[0].std_error)
        .num("di_dsnr_fd", rep.di_dsnr_fd[0])
        .num("mmse_plus_psi", rep.mmse_plus_psi[0])
        .num("rel_error", rep.rel_errors[0])
        .str();
}

std::string gradient_check_point(const PointCtx& c) {
    static const std::pair<WrtMatrix, const char*> kWrts[] = {
        {WrtMatrix::h1, "h1"},
        {WrtMatrix::h2, "h2"},
        {WrtMatrix::p1, "p1"},
        {WrtMatrix::p2, "p2"},
    };
    std::string out;
    for (const auto& [wrt, name] : kWrts) {
        Eigen::MatrixXcd analytic;
        switch (wrt) {
            case WrtMatrix::h1:
                analytic = grad_h(c.sys, 1, c.seed, c.spec->n_samples,
                                  c.inner_workers);
                break;
            case WrtMatrix::h2:
                analytic = grad_h(c.sys, 2, c.seed, c.spec->n_samples,
                                  c.inner_workers);
                break;
            case WrtMatrix::p1:
                analytic = grad_p(c.sys, 1, c.seed, c.spec->n_samples,
                                  c.inner_workers);
                break;
            case WrtMatrix::p2:
                analytic = grad_p(c.sys, 2, c.seed, c.spec->n_samples,
                                  c.inner_workers);
                break;
        }
        const Eigen::MatrixXcd numeric =
            !c.spec->force_mc && c.sys.scalar()
                ? fd_gradient(c.sys, wrt, c.spec->fd_step,
                              [](const MacSystem& s) { return mi_quad(s); })
                : fd_gradient_oracle(c.sys, wrt, c.spec->fd_step, c.seed,
                                     c.spec->n_samples, c.inner_workers);
        const GradientReport rep = gradient_report(analytic, numeric);
        out += axes_row(c)
                   .text(name)
                   .num("rel_error", rep.rel_error)
                   .num("convention_scale", rep.convention_scale)
                   .str();
    }
    return out;
}

std::string lowsnr_check_point(const PointCtx& c) {
    const LowSnrExpansion ex = low_snr_expansion(c.sys);
    const double s = c.sys.snr;
    const double series = ex.first_order * s + ex.second_order * s * s;
    double mi = 0, se = 0;
    if (!c.spec->force_mc && c.sys.scalar()) {
        mi = mi_quad(c.sys);
    } else {
        const McEstimate est = mutual_information_nats(
            c.sys, c.seed, c.spec->n_samples, c.inner_workers);
        mi = est.value;
        se = est.std_error;
    }
    return axes_row(c)
        .num("mi_nats", mi)
        .num("mi_se_nats", se)
        .num("series_nats", series)
        .num("abs_diff", std::abs(mi - series))
        .str();
}

std::string power_allocation_point(const PointCtx& c) {
    const SweepSpec& spec = *c.spec;
    if (spec.gains1.empty() || spec.gains2.empty())
        throw std::invalid_argument(
            "config key 'gains1': power-allocation needs gains1 and gains2");
    if (spec.base.c1.dim() != 1 || spec.base.c2.dim() != 1)
        throw std::invalid_argument(
            "config key 'n_t': power-allocation works on scalar "
            "constellations (n_t = 1)");
    SolverOptions so = spec.solver;
    so.seed = c.seed;
    so.workers = c.inner_workers;
    const PowerAllocation pa = solve_power_allocation(
        spec.gains1, spec.gains2, spec.q1, spec.q2, c.sys.snr, spec.base.c1,
        spec.base.c2, so);
    std::string out;
    for (size_t j = 0; j < spec.gains1.size(); ++j) {
        Row r(c);
        r.num("snr", c.ax_snr)
            .count("subchannel", j)
            .num("gain1_re", spec.gains1[j].real())
            .num("gain1_im", spec.gains1[j].imag())
            .num("gain2_re", spec.gains2[j].real())
            .num("gain2_im", spec.gains2[j].imag())
            .num("power1", pa.powers1[j])
            .num("power2", pa.powers2[j])
            .num("gamma1", pa.gamma1)
            .num("gamma2", pa.gamma2)
            .num("kkt_residual", pa.kkt_residual)
            .count("iterations", uint64_t(pa.iterations))
            .count("converged", pa.converged ? 1 : 0);
        out += r.str();
    }
    return out;
}

std::string mercury_point(const PointCtx& c) {
    const SweepSpec& spec = *c.spec;
    if (spec.gains1.empty())
        throw std::invalid_argument(
            "config key 'gains1': mercury needs per-sub-channel gains");
    if (spec.base.c1.dim() != 1)
        throw std::invalid_argument(
            "config key 'n_t': mercury works on a scalar constellation "
            "(n_t = 1)");
    std::vector<double> gsq(spec.gains1.size());
    for (size_t j = 0; j < gsq.size(); ++j) gsq[j] = std::norm(spec.gains1[j]);
    const PowerAllocation mc =
        mercury_waterfilling(gsq, spec.q1, c.sys.snr, spec.base.c1);
    const PowerAllocation wf = waterfilling(gsq, spec.q1, c.sys.snr);
    std::string out;
    for (size_t j = 0; j < gsq.size(); ++j) {
        Row r(c);
        r.num("snr", c.ax_snr)
            .count("subchannel", j)
            .num("gain_sq", gsq[j])
            .num("power", mc.powers1[j])
            .num("power_waterfilling", wf.powers1[j])
            .num("gamma", mc.gamma1)
            .num("kkt_residual", mc.kkt_residual);
        out += r.str();
    }
    return out;
}

void append_matrix_cells(Row& r, const char* what, const Eigen::MatrixXcd& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            r.num(what, m(i, j).real());
            r.num(what, m(i, j).imag());
        }
}

std::string precode_point(const PointCtx& c) {
    SolverOptions so = c.spec->solver;
    so.seed = c.seed;
    so.workers = c.inner_workers;
    const PrecoderSolution sol =
        solve_precoders(c.sys, c.spec->q1, c.spec->q2, so);
    Row r(c);
    r.num("snr", c.ax_snr)
        .num("objective_bits", sol.objective.value)
        .num("objective_se", sol.objective.std_error)
        .num("kkt_residual", sol.kkt_residual)
        .count("iterations", uint64_t(sol.iterations))
        .count("converged", sol.converged ? 1 : 0)
        .num("nu1", sol.nu1)
        .num("nu2", sol.nu2);
    append_matrix_cells(r, "p1", sol.p1);
    append_matrix_cells(r, "p2", sol.p2);
    return r.str();
}

std::string precode_header(const SweepSpec& spec) {
    std::string h =
        "snr,objective_bits,objective_se,kkt_residual,iterations,converged,"
        "nu1,nu2";
    const int nt = spec.base.n_t();
    for (int k = 1; k <= 2; ++k)
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < nt; ++j) {
                const std::string cell =
                    "p" + std::to_string(k) + "_" + std::to_string(i) +
                    std::to_string(j);
                h += "," + cell + "_re," + cell + "_im";
            }
    return h;
}

std::string header_for(const SweepSpec& spec) {
    const std::string& e = spec.experiment;
    if (e == "mi-surface") return "p1,p2,snr,mi_bits,mi_se_bits";
    if (e == "mmse-surface") return "p1,p2,snr,mmse_total,mmse_total_se";
    if (e == "per-user-mmse")
        return "p1,p2,snr,mmse1,mmse1_se,mmse2,mmse2_se";
    if (e == "covariance-surface")
        return "p1,p2,snr,psi,psi_se,coupling12_re,coupling12_im,"
               "coupling21_re,coupling21_im";
    if (e == "power-allocation")
        return "snr,subchannel,gain1_re,gain1_im,gain2_re,gain2_im,power1,"
               "power2,gamma1,gamma2,kkt_residual,iterations,converged";
    if (e == "immse-check")
        return "p1,p2,snr,i_nats,i_se_nats,di_dsnr_fd,mmse_plus_psi,"
               "rel_error";
    if (e == "gradient-check")
        return "p1,p2,snr,wrt,rel_error,convention_scale";
    if (e == "lowsnr-check")
        return "p1,p2,snr,mi_nats,mi_se_nats,series_nats,abs_diff";
    if (e == "precode") return precode_header(spec);
    if (e == "mercury")
        return "snr,subchannel,gain_sq,power,power_waterfilling,gamma,"
               "kkt_residual";
    throw std::invalid_argument(
        "config key 'experiment': unknown experiment '" + e + "'");
}

std::string run_point(const PointCtx& c) {
    const std::string& e = c.spec->experiment;
    if (e == "mi-surface") return mi_surface_point(c);
    if (e == "mmse-surface") return mmse_surface_point(c);
    if (e == "per-user-mmse") return per_user_mmse_point(c);
    if (e == "covariance-surface") return covariance_surface_point(c);
    if (e == "power-allocation") return power_allocation_point(c);
    if (e == "immse-check") return immse_check_point(c);
    if (e == "gradient-check") return gradient_check_point(c);
    if (e == "lowsnr-check") return lowsnr_check_point(c);
    if (e == "precode") return precode_point(c);
    if (e == "mercury") return mercury_point(c);
    throw std::invalid_argument(
        "config key 'experiment': unknown experiment '" + e + "'");
}

std::vector<double> axis_values(const Config& cfg, const std::string& name) {
    const std::string kmin = name + "_min";
    const std::string kmax = name + "_max";
    const std::string kstep = name + "_step";
    if (!cfg.has(kmin) && !cfg.has(kmax) && !cfg.has(kstep)) return {};
    const double lo = cfg.get_double(kmin);
    const double hi = cfg.get_double(kmax, lo);
    if (hi < lo)
        throw std::invalid_argument("config key '" + kmax +
                                    "': must be >= " + kmin);
    if (hi == lo) return {lo};
    const double step = cfg.get_double(kstep);
    if (!(step > 0))
        throw std::invalid_argument("config key '" + kstep +
                                    "': must be > 0");
    const size_t count = size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> vals(count);
    for (size_t i = 0; i < count; ++i) vals[i] = lo + double(i) * step;
    return vals;
}

} // namespace

SweepSpec sweep_from_config(const Config& cfg) {
    SweepSpec spec;
    if (!cfg.has("experiment"))
        throw std::invalid_argument("config key 'experiment': missing");
    spec.experiment = cfg.get_string("experiment", "");
    spec.base = system_from_config(cfg);
    spec.p1_axis = axis_values(cfg, "p1");
    spec.p2_axis = axis_values(cfg, "p2");
    spec.snr_axis = axis_values(cfg, "snr");
    spec.q1 = cfg.get_double("q1", 1.0);
    spec.q2 = cfg.get_double("q2", 1.0);
    if (cfg.has("gains1")) spec.gains1 = cfg.get_cplx_list("gains1");
    if (cfg.has("gains2")) spec.gains2 = cfg.get_cplx_list("gains2");
    if (!spec.gains1.empty() && !spec.gains2.empty() &&
        spec.gains1.size() != spec.gains2.size())
        throw std::invalid_argument(
            "config key 'gains2': length differs from gains1");
    spec.seed = cfg.get_u64("seed", 1);
    spec.n_samples = cfg.get_u64("n_samples", 200000);
    spec.workers = cfg.get_int("workers", 0);
    spec.fd_step = cfg.get_double("fd_step", 0.0);
    const std::string est = cfg.get_string("estimator", "auto");
    if (est != "auto" && est != "mc")
        throw std::invalid_argument(
            "config key 'estimator': expected 'auto' or 'mc', got '" + est +
            "'");
    spec.force_mc = est == "mc";
    spec.solver.damping = cfg.get_double("damping", spec.solver.damping);
    spec.solver.tolerance =
        cfg.get_double("tolerance", spec.solver.tolerance);
    spec.solver.max_iters = cfg.get_int("max_iters", spec.solver.max_iters);
    spec.solver.restarts = cfg.get_int("restarts", spec.solver.restarts);
    spec.solver.samples_initial =
        cfg.get_u64("samples_initial", spec.solver.samples_initial);
    spec.solver.gaussian_inputs = cfg.get_bool("gaussian_inputs", false);
    spec.solver.seed = spec.seed;
    spec.solver.workers = spec.workers;
    spec.out_path = cfg.get_string("out", "");
    spec.provenance_hash = config_hash(cfg);
    header_for(spec); // validates the experiment id early
    return spec;
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.base.validate();
    const std::string header = header_for(spec);

    const size_t n1 = std::max<size_t>(1, spec.p1_axis.size());
    const size_t n2 = std::max<size_t>(1, spec.p2_axis.size());
    const size_t ns = std::max<size_t>(1, spec.snr_axis.size());
    std::vector<GridPoint> grid;
    grid.reserve(n1 * n2 * ns);
    for (size_t i1 = 0; i1 < n1; ++i1)
        for (size_t i2 = 0; i2 < n2; ++i2)
            for (size_t is = 0; is < ns; ++is) {
                GridPoint g;
                g.index = (i1 * n2 + i2) * ns + is;
                if (!spec.p1_axis.empty()) {
                    g.has_p1 = true;
                    g.p1 = spec.p1_axis[i1];
                }
                if (!spec.p2_axis.empty()) {
                    g.has_p2 = true;
                    g.p2 = spec.p2_axis[i2];
                }
                if (!spec.snr_axis.empty()) {
                    g.has_snr = true;
                    g.snr = spec.snr_axis[is];
                }
                grid.push_back(g);
            }

    int w = spec.workers > 0 ? spec.workers
                             : int(std::thread::hardware_concurrency());
    if (w < 1) w = 1;
    const int outer = int(std::min<size_t>(size_t(w), grid.size()));
    const int inner = grid.size() > 1 ? 1 : w;

    std::vector<std::string> blocks(grid.size());
    std::atomic<size_t> cursor{0};
    std::mutex err_mu;
    std::exception_ptr error;

    const auto body = [&]() {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= grid.size()) return;
            {
                const std::lock_guard<std::mutex> lock(err_mu);
                if (error) return;
            }
            try {
                PointCtx c;
                c.spec = &spec;
                c.g = grid[i];
                c.sys = system_at(spec, grid[i]);
                c.seed = derive_seed(spec.seed, grid[i].index);
                c.inner_workers = inner;
                c.ax_p1 = grid[i].has_p1 ? grid[i].p1
                                         : spec.base.p1.squaredNorm();
                c.ax_p2 = grid[i].has_p2 ? grid[i].p2
                                         : spec.base.p2.squaredNorm();
                c.ax_snr = grid[i].has_snr ? grid[i].snr : spec.base.snr;
                blocks[i] = run_point(c);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(err_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (outer <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(outer));
        for (int t = 0; t < outer; ++t) pool.emplace_back(body);
        for (std::thread& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    std::ostringstream csv;
    csv << "# macmi " << kVersion << " experiment=" << spec.experiment
        << " config_hash=0x" << std::hex << spec.provenance_hash << std::dec
        << " seed=" << spec.seed << " n_samples=" << spec.n_samples
        << " solver_samples=" << spec.solver.samples_initial
        << " grid_points=" << grid.size() << "\n";
    csv << header << "\n";
    SweepResult res;
    for (const std::string& b : blocks) {
        res.rows += size_t(std::count(b.begin(), b.end(), '\n'));
        csv << b;
    }
    res.csv = csv.str();

    if (!spec.out_path.empty()) {
        std::ofstream out(spec.out_path, std::ios::binary);
        out << res.csv;
        if (!out)
            throw std::runtime_error("output path not writable: " +
                                     spec.out_path);
    }
    std::ostringstream sum;
    sum << "experiment " << spec.experiment << ": " << grid.size()
        << " grid points, " << res.rows << " rows";
    if (!spec.out_path.empty()) sum << " -> " << spec.out_path;
    res.summary = sum.str();
    return res;
}

InterferenceReport interference_report(const MacSystem& sys, uint64_t seed,
                                       uint64_t n_samples, int workers) {
    sys.validate();
    InterferenceReport rep;
    rep.stats = sys.scalar() ? posterior_stats_quad(sys)
                             : posterior_stats(sys, seed, n_samples, workers);
    rep.coupling12 = sys.h1.adjoint() * sys.h2 * sys.p2 * rep.stats.cross21;
    rep.coupling21 = sys.h2.adjoint() * sys.h1 * sys.p1 * rep.stats.cross12;
    if (sys.scalar()) {
        rep.has_rewrite = true;
        // single-channel covariance form: the coupling renormalized by the
        // channel product, i.e. cov(snr h1^dag h2 p2 xhat2, xhat1) divided
        // by snr h1^dag h2 (zero-mean inputs make the covariance a bare
        // cross-moment, so this is p2 E[xhat2 xhat1^dag])
        const cplx ch12 = std::conj(sys.h1(0, 0)) * sys.h2(0, 0);
        const cplx ch21 = std::conj(sys.h2(0, 0)) * sys.h1(0, 0);
        rep.rewrite12 =
            std::abs(ch12) > 0 ? rep.coupling12(0, 0) / ch12 : cplx(0, 0);
        rep.rewrite21 =
            std::abs(ch21) > 0 ? rep.coupling21(0, 0) / ch21 : cplx(0, 0);
    }
    return rep;
}

} // namespace macmi
