#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eestim/estimators.hpp"

namespace eestim {

// Mean and sample (n-1) standard deviation.
struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};
MeanStd mean_std(std::span<const double> values);

struct ConvergenceReport {
    double tau = 0.1;
    std::size_t t_burnin = 0;
    std::size_t tail_length = 0;
    std::vector<double> t_ratio;     // |mean(d_i)| / sd(d_i) over the tail
    std::vector<bool> degenerate;    // sd = 0 with nonzero mean
    std::vector<double> sigma_ratio; // A_i = sd(theta_i) / max(|mean theta_i|, c)
    double sigma_dispersion = 1.0;   // max A_i / min A_i
    bool passed = false;             // every t-ratio below tau, none degenerate
};

// t-ratio test on the discrepancy columns of the trace tail (rows t > t_B).
ConvergenceReport t_ratio_test(const EstimationTrace& trace, std::size_t t_burnin, double tau = 0.1);

struct SigmaCondition {
    std::vector<double> ratio;  // A_i
    double dispersion = 1.0;    // max_i A_i / min_i A_i (1 when all zero)
};

// Measures A_i = sd(theta_i) / max(|<theta_i>|, c) over the tail. Reported,
// never enforced.
SigmaCondition sigma_condition(const EstimationTrace& trace, std::size_t t_burnin, double c);

// Sample standard deviation of each theta column over the tail.
std::vector<double> tail_stddev(const EstimationTrace& trace, std::size_t t_burnin);

// Combined report: t-ratios plus the sigma condition.
ConvergenceReport diagnose(const EstimationTrace& trace, std::size_t t_burnin, double tau, double c);

}  // namespace eestim
