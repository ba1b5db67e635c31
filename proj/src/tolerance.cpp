#include "capaf/tolerance.hpp"

#include "capaf/error.hpp"

#include <algorithm>
#include <cmath>

namespace capaf {

double ToleranceProfile::robin_tolerance(double d_rho, int order, double scale) const
{
    return std::max(robin_floor, robin_coeff * std::pow(d_rho, order) * std::max(1.0, scale));
}

double ToleranceProfile::robin_limit(double d_rho, int order, double scale, double estimate) const
{
    return robin_tolerance(d_rho, order, scale) + robin_estimate_factor * estimate;
}

ToleranceProfile ToleranceProfile::defaults() { return {}; }

ToleranceProfile ToleranceProfile::strict()
{
    ToleranceProfile t;
    t.name = "strict";
    t.robin_coeff = 5.0;
    t.robin_estimate_factor = 2.0;
    t.noise_budget = 1e-10;
    t.convexity_floor = 1e-9;
    return t;
}

ToleranceProfile ToleranceProfile::by_name(const std::string& name)
{
    if (name == "default") {
        return defaults();
    }
    if (name == "strict") {
        return strict();
    }
    throw Error(ErrorCode::Parse, "unknown tolerance profile '" + name + "'");
}

nlohmann::json to_json(const ToleranceProfile& t)
{
    return {
        {"name", t.name},
        {"robin_coeff", t.robin_coeff},
        {"robin_floor", t.robin_floor},
        {"robin_estimate_factor", t.robin_estimate_factor},
        {"convexity_floor", t.convexity_floor},
        {"noise_budget", t.noise_budget},
        {"kernel_rel", t.kernel_rel},
        {"spectral_delta", t.spectral_delta},
        {"equality_factor", t.equality_factor},
    };
}

} // namespace capaf
