#include "gnar/infer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gnar {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

// Acklam's rational approximation polished with one Halley step.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * 3.141592653589793238463) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double residual_variance(const FitResult& fit, const Panel& panel, const WeightMatrix& w) {
    const int n = panel.n_nodes();
    const int horizon = panel.horizon();
    const int g_count = fit.params.n_groups;
    const long dof = static_cast<long>(n) * horizon -
                     static_cast<long>(g_count) * (g_count + fit.params.p + 1);
    if (dof <= 0) throw std::domain_error("residual_variance: nonpositive degrees of freedom");
    const double q = loss(fit.params, fit.membership, panel, w);
    const double rss = q * n * horizon;
    return rss / static_cast<double>(dof);
}

Eigen::MatrixXd covariance(const FitResult& fit, int group, double sigma2, bool* singular) {
    if (group < 0 || group >= fit.params.n_groups)
        throw std::invalid_argument("covariance: bad group index");
    const GroupGram& gram = fit.grams.at(group);
    if (gram.rows == 0) throw std::domain_error("covariance: empty group");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram.xtx);
    if (singular) *singular = cod.rank() < gram.xtx.rows();
    return sigma2 * cod.pseudoInverse();
}

InferenceResult confidence_intervals(const FitResult& fit, const Panel& panel,
                                     const WeightMatrix& w, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("confidence_intervals: level must be in (0,1)");
    const int g_count = fit.params.n_groups;
    const int dim = g_count + fit.params.p + 1;
    const double z = normal_quantile(0.5 * (1.0 + level));
    const double nan = std::numeric_limits<double>::quiet_NaN();

    InferenceResult out;
    out.sigma2_hat = residual_variance(fit, panel, w);
    out.level = level;
    out.n_groups = g_count;
    out.p = fit.params.p;
    out.groups.resize(g_count);
    for (int g = 0; g < g_count; ++g) {
        GroupInference& gi = out.groups[g];
        gi.estimate.resize(dim);
        gi.estimate.head(g_count) = fit.params.beta.row(g);
        gi.estimate[g_count] = fit.params.nu[g];
        gi.estimate.tail(fit.params.p) = fit.params.zeta.row(g);
        gi.n_members = fit.grams.at(g).n_members;
        gi.se.setConstant(dim, nan);
        gi.ci_lo.setConstant(dim, nan);
        gi.ci_hi.setConstant(dim, nan);
        gi.p_value.setConstant(dim, nan);
        gi.valid.assign(dim, false);
        if (fit.grams.at(g).rows == 0) {
            gi.singular = true;
            continue;
        }
        bool singular = false;
        const Eigen::MatrixXd cov = covariance(fit, g, out.sigma2_hat, &singular);
        gi.singular = singular;
        // With a rank-deficient Gram only coefficients outside the null
        // space get intervals; the pseudo-inverse diagonal is zero exactly
        // on directions the data cannot identify, which we flag instead.
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fit.grams.at(g).xtx);
        for (int k = 0; k < dim; ++k) {
            if (singular) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
                e[k] = 1.0;
                const Eigen::VectorXd back = fit.grams.at(g).xtx * cod.solve(e);
                if ((back - e).lpNorm<Eigen::Infinity>() > 1e-8) continue;  // unidentified
            }
            const double var = std::max(0.0, cov(k, k));
            const double se = std::sqrt(var);
            gi.valid[k] = true;
            gi.se[k] = se;
            gi.ci_lo[k] = gi.estimate[k] - z * se;
            gi.ci_hi[k] = gi.estimate[k] + z * se;
            if (se > 0.0)
                gi.p_value[k] = 2.0 * (1.0 - normal_cdf(std::abs(gi.estimate[k]) / se));
            else
                gi.p_value[k] = gi.estimate[k] == 0.0 ? 1.0 : 0.0;
        }
    }
    return out;
}

void write_coefficient_csv(const std::string& path, const InferenceResult& inference,
                           const std::vector<std::string>& covariate_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_coefficient_csv: cannot open " + path);
    out << "group,coefficient,estimate,se,ci_lo,ci_hi,p_value\n";
    char buf[64];
    auto fmt = [&](double v) -> std::string {
        if (std::isnan(v)) return "nan";
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    };
    for (int g = 0; g < inference.n_groups; ++g) {
        const GroupInference& gi = inference.groups[g];
        for (int k = 0; k < gi.estimate.size(); ++k) {
            std::string name;
            if (k < inference.n_groups)
                name = "beta_" + std::to_string(g + 1) + "_" + std::to_string(k + 1);
            else if (k == inference.n_groups)
                name = "nu";
            else {
                const int j = k - inference.n_groups - 1;
                name = j < static_cast<int>(covariate_names.size())
                           ? covariate_names[j]
                           : "zeta_" + std::to_string(j + 1);
            }
            out << g + 1 << "," << name << "," << fmt(gi.estimate[k]) << "," << fmt(gi.se[k])
                << "," << fmt(gi.ci_lo[k]) << "," << fmt(gi.ci_hi[k]) << ","
                << fmt(gi.p_value[k]) << "\n";
        }
    }
}

}  // namespace gnar
