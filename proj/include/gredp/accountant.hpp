#ifndef GREDP_ACCOUNTANT_HPP
#define GREDP_ACCOUNTANT_HPP

#include <cstddef>
#include <vector>

namespace gredp {

struct PrivacyBudget {
    double epsilon = 1.0;  // > 0
    double delta = 1e-5;   // in (0, 1)
    double alpha = 2.0;    // Renyi order, > 1

    void validate() const;
};

struct CompositionPlan {
    std::size_t steps = 1;  // T_e * N / B
    double per_step_epsilon = 0.0;
};

// Gaussian-mechanism noise multiplier for a single (epsilon, delta)
// release: sqrt(2 ln(1.25/delta)) / epsilon.
double calibrate_sigma(double epsilon, double delta);

// Renyi-to-(epsilon, delta) conversion: eps + ln(1/delta) / (alpha - 1).
double rdp_to_dp(double alpha, double eps_rdp, double delta);

// Linear Renyi composition over the training loop followed by a single
// conversion: total epsilon = steps * per_step_eps + ln(1/delta)/(alpha-1).
double compose_training(double per_step_epsilon, std::size_t steps, double alpha, double delta);

// Renyi divergence of the Gaussian mechanism at order alpha: alpha/(2 sigma^2).
double gaussian_renyi_epsilon(double alpha, double sigma);

// {1.5, 2, 3, ..., 64}
std::vector<double> default_alpha_grid();

// Running budget after steps_so_far noise additions at noise multiplier
// sigma: minimize the converted epsilon over the alpha grid. Zero steps
// spend nothing. Monotone nondecreasing in steps_so_far.
double spent_epsilon(double sigma, std::size_t steps_so_far, double delta,
                     const std::vector<double>& alpha_grid);

}  // namespace gredp

#endif  // GREDP_ACCOUNTANT_HPP
