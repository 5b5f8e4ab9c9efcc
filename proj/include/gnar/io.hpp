#pragma once

#include <map>
#include <string>
#include <vector>

#include "gnar/estimate.hpp"
#include "gnar/model.hpp"
#include "gnar/refine.hpp"

namespace gnar {

/// Long-format panel CSV "node,t,y" (1-based node ids, t = 0..T).
Eigen::MatrixXd load_panel_csv(const std::string& path);
void save_panel_csv(const std::string& path, const Eigen::MatrixXd& y);

/// Covariates CSV "node,z1,...,zp"; header names are returned via `names`.
Eigen::MatrixXd load_covariates_csv(const std::string& path,
                                    std::vector<std::string>* names = nullptr);
void save_covariates_csv(const std::string& path, const Eigen::MatrixXd& z,
                         const std::vector<std::string>& names = {});

/// Membership CSV "node,group" (both 1-based).
Membership load_membership_csv(const std::string& path);
void save_membership_csv(const std::string& path, const Membership& mem);

/// Model parameters as structured text: G, p, beta/zeta row-major, nu.
GnarParams load_params_json(const std::string& path);
void save_params_json(const std::string& path, const GnarParams& params);

/// Fit persistence: params, labels, loss trace, convergence flags, seed,
/// Gram matrices and (optionally) the refinement report.
void save_fit_json(const std::string& path, const FitResult& fit, std::uint64_t seed,
                   const RefinementReport* refinement = nullptr);
FitResult load_fit_json(const std::string& path, RefinementReport* refinement = nullptr);

/**
 * Flat key-value configuration with one [section] per run. Keys before
 * the first section act as defaults inherited by every section.
 */
struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    long get_int(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;
};

std::vector<ConfigSection> load_config(const std::string& path);

/// "2:5" or "2,3,4,5" -> {2,3,4,5}.
std::vector<int> parse_grid(const std::string& text);

std::string format_double(double value);

}  // namespace gnar
