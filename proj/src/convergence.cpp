#include "eestim/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eestim/error.hpp"

namespace eestim {
namespace {

void require_tail(const EstimationTrace& trace, std::size_t t_burnin) {
    if (t_burnin >= trace.size() || trace.size() - t_burnin < 2) {
        throw InvalidInput("tail after burn-in needs at least 2 rows");
    }
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    if (values.empty()) return r;
    for (double v : values) r.mean += v;
    r.mean /= static_cast<double>(values.size());
    if (values.size() < 2) return r;
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return r;
}

ConvergenceReport t_ratio_test(const EstimationTrace& trace, std::size_t t_burnin, double tau) {
    require_tail(trace, t_burnin);
    ConvergenceReport report;
    report.tau = tau;
    report.t_burnin = t_burnin;
    report.tail_length = trace.size() - t_burnin;
    report.passed = true;
    const std::size_t L = trace.num_params();
    for (std::size_t i = 0; i < L; ++i) {
        const auto col = trace.d_column(i, t_burnin);
        const MeanStd ms = mean_std(col);
        double ratio = 0.0;
        bool degenerate = false;
        if (ms.stddev > 0.0) {
            ratio = std::abs(ms.mean) / ms.stddev;
        } else if (ms.mean != 0.0) {
            ratio = std::numeric_limits<double>::infinity();
            degenerate = true;
        }
        report.t_ratio.push_back(ratio);
        report.degenerate.push_back(degenerate);
        if (degenerate || !(ratio < tau)) report.passed = false;
    }
    return report;
}

std::vector<double> tail_stddev(const EstimationTrace& trace, std::size_t t_burnin) {
    require_tail(trace, t_burnin);
    std::vector<double> out;
    for (std::size_t i = 0; i < trace.num_params(); ++i) out.push_back(mean_std(trace.theta_column(i, t_burnin)).stddev);
    return out;
}

SigmaCondition sigma_condition(const EstimationTrace& trace, std::size_t t_burnin, double c) {
    require_tail(trace, t_burnin);
    if (!(c > 0.0)) throw InvalidInput("c must be > 0");
    SigmaCondition out;
    for (std::size_t i = 0; i < trace.num_params(); ++i) {
        const MeanStd ms = mean_std(trace.theta_column(i, t_burnin));
        out.ratio.push_back(ms.stddev / std::max(std::abs(ms.mean), c));
    }
    const auto [lo, hi] = std::minmax_element(out.ratio.begin(), out.ratio.end());
    if (*hi == 0.0) {
        out.dispersion = 1.0;
    } else if (*lo == 0.0) {
        out.dispersion = std::numeric_limits<double>::infinity();
    } else {
        out.dispersion = *hi / *lo;
    }
    return out;
}

ConvergenceReport diagnose(const EstimationTrace& trace, std::size_t t_burnin, double tau, double c) {
    ConvergenceReport report = t_ratio_test(trace, t_burnin, tau);
    const SigmaCondition sc = sigma_condition(trace, t_burnin, c);
    report.sigma_ratio = sc.ratio;
    report.sigma_dispersion = sc.dispersion;
    return report;
}

}  // namespace eestim
