#include "gredp/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gredp {

void PrivacyBudget::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyBudget: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("PrivacyBudget: delta must lie in (0, 1)");
    if (!(alpha > 1.0)) throw std::invalid_argument("PrivacyBudget: alpha must be > 1");
}

double calibrate_sigma(double epsilon, double delta) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("calibrate_sigma: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("calibrate_sigma: delta must lie in (0, 1)");
    return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double rdp_to_dp(double alpha, double eps_rdp, double delta) {
    if (!(alpha > 1.0)) throw std::invalid_argument("rdp_to_dp: alpha must be > 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("rdp_to_dp: delta must lie in (0, 1)");
    return eps_rdp + std::log(1.0 / delta) / (alpha - 1.0);
}

double compose_training(double per_step_epsilon, std::size_t steps, double alpha, double delta) {
    if (steps < 1) throw std::invalid_argument("compose_training: steps must be >= 1");
    return rdp_to_dp(alpha, static_cast<double>(steps) * per_step_epsilon, delta);
}

double gaussian_renyi_epsilon(double alpha, double sigma) {
    if (!(alpha > 1.0)) throw std::invalid_argument("gaussian_renyi_epsilon: alpha must be > 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_renyi_epsilon: sigma must be > 0");
    return alpha / (2.0 * sigma * sigma);
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid{1.5};
    for (int a = 2; a <= 64; ++a) grid.push_back(static_cast<double>(a));
    return grid;
}

double spent_epsilon(double sigma, std::size_t steps_so_far, double delta,
                     const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty()) throw std::invalid_argument("spent_epsilon: alpha grid must be non-empty");
    if (steps_so_far == 0) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (double alpha : alpha_grid) {
        const double rdp = static_cast<double>(steps_so_far) * gaussian_renyi_epsilon(alpha, sigma);
        best = std::min(best, rdp_to_dp(alpha, rdp, delta));
    }
    return best;
}

}  // namespace gredp
