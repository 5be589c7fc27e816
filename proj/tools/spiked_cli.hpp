// Command-line front end: complexity grids and projections, thresholds, the Kac-Rice
// oracle and tensor simulations. Every command renders its CSV into memory first, so a
// validation failure never leaves a partial file behind.
//
// Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
#pragma once

#include "spiked/complexity.hpp"
#include "spiked/explicit_formulas.hpp"
#include "spiked/kac_rice.hpp"
#include "spiked/landscape_scan.hpp"
#include "spiked/tensor_lab.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace spiked::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kIo = 3, kNumerical = 4 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of a run; fields not used by the selected command are ignored.
struct RunConfig {
    std::string command;
    int k = 3;
    double lambda = 1.0;
    std::uint64_t seed = 1;
    std::string out = "-";
    unsigned threads = 1;

    std::optional<double> m_min, m_max, x_min, x_max;
    std::optional<std::size_t> m_steps, x_steps;

    std::string axis = "m";
    std::size_t steps = 199;

    std::vector<int> n_list{10, 20, 40};
    std::size_t samples = 200;
    std::string which = "star";

    std::string method = "power";
    int n = 7;
    std::size_t runs = 20;
    std::size_t starts = 200;
    bool noiseless = false;
    int max_iters = 1000;
    double tol = 1e-10;
    double step = 0.05;
    std::string hist_out;
    std::size_t m_bins = 20;
    std::size_t f_bins = 20;
};

/// Shortest round-trip-safe rendering with 17 significant digits, "." decimal point,
/// "-inf" for negative infinity.
inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace detail {

class Csv {
public:
    explicit Csv(std::ostringstream& os) : os_(os) {}

    template <class... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((os_ << (first ? "" : ",") << render(fields), first = false), ...);
        os_ << '\n';
    }

private:
    static std::string render(double v) { return format_real(v); }
    static std::string render(const std::string& s) { return s; }
    static std::string render(const char* s) { return s; }
    template <class T>
        requires std::is_integral_v<T>
    static std::string render(T v) { return std::to_string(v); }

    std::ostringstream& os_;
};

inline Which parse_which(const std::string& w) {
    if (w == "star") return Which::star;
    if (w == "zero") return Which::zero;
    throw UsageError("--which must be 'star' or 'zero'");
}

inline ModelParams params_of(const RunConfig& c) { return ModelParams(c.k, c.lambda); }

inline void require_positive(std::size_t v, const char* name) {
    if (v < 1) throw UsageError(std::string(name) + " must be >= 1");
}

}  // namespace detail

/// Complexity values at every cell center: header m,x,s_star,s_zero, m-major.
inline std::string cmd_grid(const RunConfig& c) {
    const ModelParams p = detail::params_of(c);
    const Interval xs = default_x_search(p);
    GridSpec g{c.m_min.value_or(-1.0), c.m_max.value_or(1.0), c.x_min.value_or(xs.lo), c.x_max.value_or(xs.hi),
               c.m_steps.value_or(201), c.x_steps.value_or(201)};
    g.validate();
    const ComplexityGrid values = evaluate_grid(p, g, c.threads);
    std::ostringstream os;
    detail::Csv csv(os);
    csv.row("m", "x", "s_star", "s_zero");
    for (std::size_t i = 0; i < g.m_steps; ++i)
        for (std::size_t j = 0; j < g.x_steps; ++j)
            csv.row(g.m_at(i), g.x_at(j), values.s_star[values.index(i, j)], values.s_zero[values.index(i, j)]);
    return os.str();
}

/// Projection curves along m (maximized over x) or along x (maximized over m).
inline std::string cmd_projection(const RunConfig& c) {
    const ModelParams p = detail::params_of(c);
    if (c.axis != "m" && c.axis != "x") throw UsageError("--axis must be 'm' or 'x'");
    if (c.steps < 2) throw UsageError("--steps must be >= 2");
    const bool along_m = c.axis == "m";
    const Interval xs_default = default_x_search(p);
    const Interval m_iv{c.m_min.value_or(along_m ? -0.99 : -0.999), c.m_max.value_or(along_m ? 0.99 : 0.999)};
    const Interval x_iv{c.x_min.value_or(xs_default.lo), c.x_max.value_or(xs_default.hi)};
    if (!(m_iv.lo > -1.0 && m_iv.hi < 1.0 && m_iv.lo < m_iv.hi)) throw UsageError("m range must lie inside (-1, 1)");
    if (!(std::isfinite(x_iv.lo) && std::isfinite(x_iv.hi) && x_iv.lo < x_iv.hi)) throw UsageError("invalid x range");

    const Interval axis_iv = along_m ? m_iv : x_iv;
    std::vector<double> pts(c.steps);
    for (std::size_t i = 0; i < c.steps; ++i)
        pts[i] = axis_iv.lo + axis_iv.width() * static_cast<double>(i) / static_cast<double>(c.steps - 1);
    // Pin the exact midpoint to zero for symmetric ranges.
    for (double& v : pts)
        if (std::abs(v) < 1e-14 * axis_iv.width()) v = 0.0;

    std::vector<double> star(c.steps), zero(c.steps);
    parallel_for(c.steps, c.threads, [&](std::size_t i) {
        if (along_m) {
            star[i] = project_max_over_x(p, pts[i], Which::star, x_iv).value.value();
            zero[i] = project_max_over_x(p, pts[i], Which::zero, x_iv).value.value();
        } else {
            star[i] = project_max_over_m(p, pts[i], Which::star, m_iv).value.value();
            zero[i] = project_max_over_m(p, pts[i], Which::zero, m_iv).value.value();
        }
    });
    std::ostringstream os;
    detail::Csv csv(os);
    if (along_m) csv.row("m", "s_star_of_m", "s_zero_of_m");
    else csv.row("x", "s_star_of_x", "s_zero_of_x");
    for (std::size_t i = 0; i < c.steps; ++i) csv.row(pts[i], star[i], zero[i]);
    return os.str();
}

/// Thresholds and band endpoints as quantity,value rows; missing values print as "absent".
inline std::string cmd_thresholds(const RunConfig& c) {
    const ModelParams p = detail::params_of(c);
    std::ostringstream os;
    detail::Csv csv(os);
    auto opt_row = [&](const char* name, std::optional<double> v) {
        if (v) csv.row(name, *v);
        else csv.row(name, "absent");
    };
    csv.row("quantity", "value");
    csv.row("k", c.k);
    csv.row("lambda", c.lambda);
    csv.row("lambda_c", lambda_critical(c.k));
    if (c.lambda > 0.0) {
        const ThresholdReport t = thresholds(p);
        const BandReport zero = band_endpoints(p, Which::zero);
        const BandReport star = band_endpoints(p, Which::star);
        csv.row("m_c", t.m_c);
        opt_row("good_location_zero", t.good_zero);
        opt_row("band_m1", zero.m1);
        opt_row("band_m2", zero.m2);
        opt_row("m_star", zero.m_star);
        opt_row("star_band_m1", star.m1);
        opt_row("star_band_m2", star.m2);
    } else {
        for (const char* name : {"m_c", "good_location_zero", "band_m1", "band_m2", "m_star", "star_band_m1",
                                 "star_band_m2"})
            csv.row(name, "absent");
    }
    return os.str();
}

/// Kac-Rice Monte-Carlo log-counts per n, followed by a "# growth_rate=<slope>" line.
inline std::string cmd_oracle(const RunConfig& c) {
    const ModelParams p = detail::params_of(c);
    const Which which = detail::parse_which(c.which);
    if (c.n_list.size() < 3) throw UsageError("--n-list needs at least 3 values for the growth-rate fit");
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
        if (c.n_list[i] < 3) throw UsageError("every n must be >= 3");
        if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) throw UsageError("--n-list must be strictly ascending");
    }
    detail::require_positive(c.samples, "--samples");
    CrtQuadrature quad;
    quad.m_range = {c.m_min.value_or(-0.99), c.m_max.value_or(0.99)};
    quad.x_range = {c.x_min.value_or(-3.0), c.x_max.value_or(3.0)};
    quad.m_steps = c.m_steps.value_or(60);
    quad.x_steps = c.x_steps.value_or(60);

    std::ostringstream os;
    detail::Csv csv(os);
    csv.row("n", "log_expected_count", "std_error");
    std::vector<std::pair<double, double>> pts;
    for (int n : c.n_list) {
        const LogMcEstimate est = crt_expected(p, n, quad, c.samples, derive_seed(c.seed, static_cast<std::uint64_t>(n)),
                                               which, c.threads);
        csv.row(n, est.log_mean, est.log_std_error);
        pts.emplace_back(n, est.log_mean);
    }
    for (auto [n, l] : pts)
        if (!std::isfinite(l)) throw NumericalError("log expected count is not finite at n = " + format_real(n));
    os << "# growth_rate=" << format_real(growth_rate_fit(pts).slope) << '\n';
    return os.str();
}

/// Tensor simulations. Rows: seed,n,k,lambda,method,m_final,f_final,grad_norm,index,iters.
/// Methods: power, ascent, critical, histogram (critical plus a histogram file at --hist-out).
inline std::string cmd_simulate(const RunConfig& c, std::string* histogram_csv = nullptr) {
    static_cast<void>(detail::params_of(c));
    if (c.n < 2) throw UsageError("--n must be >= 2");
    detail::require_positive(c.runs, "--runs");
    const bool critical = c.method == "critical" || c.method == "histogram";
    if (!critical && c.method != "power" && c.method != "ascent")
        throw UsageError("--method must be power, ascent, critical or histogram");
    if (c.method == "histogram" && histogram_csv == nullptr) throw UsageError("histogram method needs --hist-out");
    if (critical) detail::require_positive(c.starts, "--starts");

    struct Row {
        std::uint64_t seed;
        double m, f, grad_norm;
        int index, iters;
    };
    std::vector<std::vector<Row>> rows(c.runs);
    std::vector<std::vector<CriticalPointRecord>> recs(c.runs);
    const unsigned inner_threads = 1;
    parallel_for(c.runs, c.threads, [&](std::size_t r) {
        const std::uint64_t run_seed = c.seed + r;
        std::mt19937_64 rng(derive_seed(run_seed, 2));
        const Eigen::VectorXd u = random_unit_vector(c.n, rng);
        const SpikedTensor y = c.noiseless ? make_planted_tensor(c.n, c.k, c.lambda, u)
                                           : make_spiked_tensor(c.n, c.k, c.lambda, u, derive_seed(run_seed, 0));
        std::mt19937_64 start_rng(derive_seed(run_seed, 1));
        Eigen::VectorXd start = random_unit_vector(c.n, start_rng);
        if (c.noiseless && start.dot(u) < 0.0) start = -start;
        auto describe = [&](const Eigen::VectorXd& s, int iters) {
            const Eigen::VectorXd g = riemannian_grad(y, s);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(riemannian_hess(y, s), Eigen::EigenvaluesOnly);
            const int index = static_cast<int>((eig.eigenvalues().array() > kZeroEigenvalue).count());
            rows[r].push_back({run_seed, s.dot(u), objective(y, s), g.norm(), index, iters});
        };
        if (c.method == "power") {
            const PowerIterationResult res = power_iteration(y, start, c.max_iters, c.tol);
            describe(res.sigma, res.iters);
        } else if (c.method == "ascent") {
            const AscentResult res = gradient_ascent(y, start, c.step, c.max_iters, c.tol);
            describe(res.sigma, res.iters);
        } else {
            CriticalPointOptions opt;
            opt.n_starts = c.starts;
            opt.seed = derive_seed(run_seed, 3);
            opt.threads = inner_threads;
            CriticalPointSearch found = find_critical_points(y, opt);
            for (const auto& rec : found.records)
                rows[r].push_back({run_seed, rec.m, rec.f_value, rec.grad_norm, rec.index, rec.iters});
            recs[r] = std::move(found.records);
        }
    });

    std::ostringstream os;
    detail::Csv csv(os);
    csv.row("seed", "n", "k", "lambda", "method", "m_final", "f_final", "grad_norm", "index", "iters");
    for (const auto& run : rows)
        for (const Row& row : run)
            csv.row(row.seed, c.n, c.k, c.lambda, c.method, row.m, row.f, row.grad_norm, row.index, row.iters);

    if (c.method == "histogram") {
        std::vector<CriticalPointRecord> all;
        for (auto& v : recs) all.insert(all.end(), v.begin(), v.end());
        const double f_hi = c.lambda + 3.0;
        const Histogram2D h = landscape_histogram(all, c.m_bins, c.f_bins, {-1.0, 1.0}, {-f_hi, f_hi});
        std::ostringstream hs;
        detail::Csv hcsv(hs);
        hcsv.row("m_lo", "m_hi", "f_lo", "f_hi", "count");
        for (std::size_t i = 0; i < h.m_bins; ++i) {
            for (std::size_t j = 0; j < h.f_bins; ++j) {
                const double mw = h.m_range.width() / static_cast<double>(h.m_bins);
                const double fw = h.f_range.width() / static_cast<double>(h.f_bins);
                hcsv.row(h.m_range.lo + mw * static_cast<double>(i), h.m_range.lo + mw * static_cast<double>(i + 1),
                         h.f_range.lo + fw * static_cast<double>(j), h.f_range.lo + fw * static_cast<double>(j + 1),
                         h.at(i, j));
            }
        }
        *histogram_csv = hs.str();
    }
    return os.str();
}

namespace detail {

inline void write_output(const std::string& path, const std::string& text, std::ostream& stdout_stream) {
    if (path == "-") {
        stdout_stream << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open output file: " + path);
    f << text;
    f.flush();
    if (!f) throw IoError("failed writing output file: " + path);
}

}  // namespace detail

/// Parses argv, runs the chosen command and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Landscape complexity of the spiked tensor model"};
    app.require_subcommand(1);
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    RunConfig c;
    double m_min = 0, m_max = 0, x_min = 0, x_max = 0;
    std::size_t m_steps = 0, x_steps = 0;

    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.add_option("--k", c.k, "tensor order (>= 3)");
    app.add_option("--lambda", c.lambda, "signal-to-noise ratio (>= 0)");
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--out", c.out, "output path, '-' for stdout");
    app.add_option("--threads", c.threads, "worker threads; output does not depend on it");
    auto* o_m_min = app.add_option("--m-min", m_min, "lower overlap bound (grid, oracle)");
    auto* o_m_max = app.add_option("--m-max", m_max, "upper overlap bound (grid, oracle)");
    auto* o_x_min = app.add_option("--x-min", x_min, "lower objective bound (grid, oracle)");
    auto* o_x_max = app.add_option("--x-max", x_max, "upper objective bound (grid, oracle)");
    auto* o_m_steps = app.add_option("--m-steps", m_steps, "overlap cells (grid, oracle)");
    auto* o_x_steps = app.add_option("--x-steps", x_steps, "objective cells (grid, oracle)");
    app.add_option("--axis", c.axis, "projection axis: m or x");
    app.add_option("--steps", c.steps, "projection sample points");
    app.add_option("--n-list", c.n_list, "comma-separated ascending dimensions for the oracle")->delimiter(',');
    app.add_option("--samples", c.samples, "GOE samples per oracle estimate");
    app.add_option("--which", c.which, "star (critical points) or zero (local maxima)");
    app.add_option("--method", c.method, "power, ascent, critical or histogram");
    app.add_option("--n", c.n, "tensor dimension for simulate");
    app.add_option("--runs", c.runs, "independent tensor draws");
    app.add_option("--starts", c.starts, "Newton starts per tensor");
    app.add_flag("--noiseless", c.noiseless, "use the planted tensor without noise");
    app.add_option("--max-iters", c.max_iters, "iteration cap for power and ascent");
    app.add_option("--tol", c.tol, "convergence tolerance for power and ascent");
    app.add_option("--step", c.step, "gradient ascent step");
    app.add_option("--hist-out", c.hist_out, "histogram CSV path for the histogram method");
    app.add_option("--m-bins", c.m_bins, "histogram overlap bins");
    app.add_option("--f-bins", c.f_bins, "histogram objective bins");

    app.add_subcommand("grid", "S_star and S_zero on an (m, x) grid");
    app.add_subcommand("projection", "maxima of both complexities over x (axis m) or m (axis x)");
    app.add_subcommand("thresholds", "lambda_c, m_c, the good location and band endpoints");
    app.add_subcommand("oracle", "finite-n Kac-Rice expected counts and their growth rate");
    app.add_subcommand("simulate", "power iteration, gradient ascent or critical point search");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::FileError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    c.command = app.get_subcommands().front()->get_name();
    if (o_m_min->count()) c.m_min = m_min;
    if (o_m_max->count()) c.m_max = m_max;
    if (o_x_min->count()) c.x_min = x_min;
    if (o_x_max->count()) c.x_max = x_max;
    if (o_m_steps->count()) c.m_steps = m_steps;
    if (o_x_steps->count()) c.x_steps = x_steps;

    try {
        if (c.threads < 1) throw UsageError("--threads must be >= 1");

        std::string text;
        std::string hist;
        if (c.command == "grid") text = cmd_grid(c);
        else if (c.command == "projection") text = cmd_projection(c);
        else if (c.command == "thresholds") text = cmd_thresholds(c);
        else if (c.command == "oracle") text = cmd_oracle(c);
        else text = cmd_simulate(c, c.hist_out.empty() ? nullptr : &hist);

        detail::write_output(c.out, text, out);
        if (!c.hist_out.empty() && c.command == "simulate") detail::write_output(c.hist_out, hist, out);
    } catch (const UsageError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const DomainError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}

}  // namespace spiked::cli
