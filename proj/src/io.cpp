#include "gnar/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gnar {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, int cols_hint = -1) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) : std::max(cols_hint, 0);
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

Eigen::MatrixXd load_panel_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::tuple<int, int, double>> cells;
    int max_node = 0, max_t = -1;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 3) throw std::runtime_error("panel csv: bad line: " + line);
        const int node = std::stoi(parts[0]);
        const int t = std::stoi(parts[1]);
        if (node < 1 || t < 0) throw std::runtime_error("panel csv: bad indices: " + line);
        cells.emplace_back(node - 1, t, std::stod(parts[2]));
        max_node = std::max(max_node, node);
        max_t = std::max(max_t, t);
    }
    if (cells.empty()) throw std::runtime_error("panel csv: no data rows in " + path);
    Eigen::MatrixXd y = Eigen::MatrixXd::Constant(max_node, max_t + 1,
                                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& [node, t, value] : cells) y(node, t) = value;
    if (!y.allFinite()) throw std::runtime_error("panel csv: missing (node, t) cells in " + path);
    return y;
}

void save_panel_csv(const std::string& path, const Eigen::MatrixXd& y) {
    auto out = open_out(path);
    out << "node,t,y\n";
    for (int i = 0; i < y.rows(); ++i)
        for (int t = 0; t < y.cols(); ++t)
            out << i + 1 << "," << t << "," << format_double(y(i, t)) << "\n";
}

Eigen::MatrixXd load_covariates_csv(const std::string& path, std::vector<std::string>* names) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("covariates csv: empty file " + path);
    auto header = split(trim(line), ',');
    if (header.size() < 2) throw std::runtime_error("covariates csv: need node plus covariates");
    if (names) names->assign(header.begin() + 1, header.end());
    const int p = static_cast<int>(header.size()) - 1;
    std::vector<std::pair<int, std::vector<double>>> rows;
    int max_node = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (static_cast<int>(parts.size()) != p + 1)
            throw std::runtime_error("covariates csv: bad line: " + line);
        const int node = std::stoi(parts[0]);
        std::vector<double> z(p);
        for (int j = 0; j < p; ++j) z[j] = std::stod(parts[j + 1]);
        rows.emplace_back(node - 1, std::move(z));
        max_node = std::max(max_node, node);
    }
    Eigen::MatrixXd z = Eigen::MatrixXd::Constant(max_node, p,
                                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& [node, values] : rows)
        for (int j = 0; j < p; ++j) z(node, j) = values[j];
    if (!z.allFinite()) throw std::runtime_error("covariates csv: missing nodes in " + path);
    return z;
}

void save_covariates_csv(const std::string& path, const Eigen::MatrixXd& z,
                         const std::vector<std::string>& names) {
    auto out = open_out(path);
    out << "node";
    for (int j = 0; j < z.cols(); ++j) {
        if (j < static_cast<int>(names.size()))
            out << "," << names[j];
        else
            out << ",z" << j + 1;
    }
    out << "\n";
    for (int i = 0; i < z.rows(); ++i) {
        out << i + 1;
        for (int j = 0; j < z.cols(); ++j) out << "," << format_double(z(i, j));
        out << "\n";
    }
}

Membership load_membership_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::pair<int, int>> rows;
    int max_node = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 2) throw std::runtime_error("membership csv: bad line: " + line);
        const int node = std::stoi(parts[0]);
        const int group = std::stoi(parts[1]);
        if (node < 1 || group < 1) throw std::runtime_error("membership csv: 1-based ids expected");
        rows.emplace_back(node - 1, group - 1);
        max_node = std::max(max_node, node);
    }
    Membership mem(max_node, -1);
    for (const auto& [node, group] : rows) mem[node] = group;
    for (int g : mem)
        if (g < 0) throw std::runtime_error("membership csv: missing nodes in " + path);
    return mem;
}

void save_membership_csv(const std::string& path, const Membership& mem) {
    auto out = open_out(path);
    out << "node,group\n";
    for (std::size_t i = 0; i < mem.size(); ++i) out << i + 1 << "," << mem[i] + 1 << "\n";
}

GnarParams load_params_json(const std::string& path) {
    auto in = open_in(path);
    json doc = json::parse(in);
    GnarParams params;
    params.n_groups = doc.at("G").get<int>();
    params.p = doc.at("p").get<int>();
    const auto beta = doc.at("beta").get<std::vector<double>>();
    const auto zeta = doc.at("zeta").get<std::vector<double>>();
    const auto nu = doc.at("nu").get<std::vector<double>>();
    if (static_cast<int>(beta.size()) != params.n_groups * params.n_groups)
        throw std::runtime_error("params json: beta must have G*G entries");
    if (static_cast<int>(nu.size()) != params.n_groups)
        throw std::runtime_error("params json: nu must have G entries");
    if (static_cast<int>(zeta.size()) != params.n_groups * params.p)
        throw std::runtime_error("params json: zeta must have G*p entries");
    params.beta.resize(params.n_groups, params.n_groups);
    params.zeta.resize(params.n_groups, params.p);
    params.nu.resize(params.n_groups);
    for (int g = 0; g < params.n_groups; ++g) {
        params.nu[g] = nu[g];
        for (int h = 0; h < params.n_groups; ++h) params.beta(g, h) = beta[g * params.n_groups + h];
        for (int j = 0; j < params.p; ++j) params.zeta(g, j) = zeta[g * params.p + j];
    }
    params.validate();
    return params;
}

void save_params_json(const std::string& path, const GnarParams& params) {
    json doc;
    doc["G"] = params.n_groups;
    doc["p"] = params.p;
    std::vector<double> beta, zeta, nu;
    for (int g = 0; g < params.n_groups; ++g) {
        nu.push_back(params.nu[g]);
        for (int h = 0; h < params.n_groups; ++h) beta.push_back(params.beta(g, h));
        for (int j = 0; j < params.p; ++j) zeta.push_back(params.zeta(g, j));
    }
    doc["beta"] = beta;
    doc["nu"] = nu;
    doc["zeta"] = zeta;
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

void save_fit_json(const std::string& path, const FitResult& fit, std::uint64_t seed,
                   const RefinementReport* refinement) {
    json doc;
    doc["G"] = fit.params.n_groups;
    doc["p"] = fit.params.p;
    doc["beta"] = matrix_to_json(fit.params.beta);
    doc["nu"] = std::vector<double>(fit.params.nu.data(), fit.params.nu.data() + fit.params.nu.size());
    doc["zeta"] = matrix_to_json(fit.params.zeta);
    json labels = json::array();
    for (int g : fit.membership) labels.push_back(g + 1);
    doc["labels"] = labels;
    doc["loss"] = fit.loss;
    doc["loss_trace"] = fit.loss_trace;
    doc["node_loss"] = fit.node_loss;
    doc["converged"] = fit.converged;
    doc["n_iterations"] = fit.n_iterations;
    doc["init_index"] = fit.init_index;
    doc["seed"] = seed;
    json grams = json::array();
    for (std::size_t g = 0; g < fit.grams.size(); ++g) {
        json entry;
        entry["group"] = g + 1;
        entry["rows"] = fit.grams[g].rows;
        entry["n_members"] = fit.grams[g].n_members;
        entry["xtx"] = matrix_to_json(fit.grams[g].xtx);
        entry["xty"] = std::vector<double>(fit.grams[g].xty.data(),
                                           fit.grams[g].xty.data() + fit.grams[g].xty.size());
        grams.push_back(entry);
    }
    doc["grams"] = grams;
    if (refinement) {
        json ref;
        json before = json::array(), after = json::array();
        for (int g : refinement->labels_before) before.push_back(g + 1);
        for (int g : refinement->labels_after) after.push_back(g + 1);
        ref["labels_before"] = before;
        ref["labels_after"] = after;
        json switched = json::array();
        for (int i : refinement->switched) switched.push_back(i + 1);
        ref["switched"] = switched;
        ref["delta_threshold"] = refinement->delta_threshold;
        ref["profile_losses"] = matrix_to_json(refinement->profile_losses);
        doc["refinement"] = ref;
    }
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

FitResult load_fit_json(const std::string& path, RefinementReport* refinement) {
    auto in = open_in(path);
    json doc = json::parse(in);
    FitResult fit;
    fit.params.n_groups = doc.at("G").get<int>();
    fit.params.p = doc.at("p").get<int>();
    fit.params.beta = matrix_from_json(doc.at("beta"));
    fit.params.zeta = matrix_from_json(doc.at("zeta"), fit.params.p);
    const auto nu = doc.at("nu").get<std::vector<double>>();
    fit.params.nu = Eigen::Map<const Eigen::VectorXd>(nu.data(), nu.size());
    if (fit.params.zeta.rows() == 0) fit.params.zeta.resize(fit.params.n_groups, fit.params.p);
    for (const auto& v : doc.at("labels")) fit.membership.push_back(v.get<int>() - 1);
    fit.loss = doc.at("loss").get<double>();
    fit.loss_trace = doc.at("loss_trace").get<std::vector<double>>();
    fit.node_loss = doc.value("node_loss", std::vector<double>{});
    fit.converged = doc.at("converged").get<bool>();
    fit.n_iterations = doc.at("n_iterations").get<int>();
    fit.init_index = doc.at("init_index").get<int>();
    for (const auto& entry : doc.at("grams")) {
        GroupGram gram;
        gram.rows = entry.at("rows").get<long>();
        gram.n_members = entry.at("n_members").get<long>();
        gram.xtx = matrix_from_json(entry.at("xtx"));
        const auto xty = entry.at("xty").get<std::vector<double>>();
        gram.xty = Eigen::Map<const Eigen::VectorXd>(xty.data(), xty.size());
        fit.grams.push_back(std::move(gram));
    }
    if (refinement && doc.contains("refinement")) {
        const auto& ref = doc.at("refinement");
        for (const auto& v : ref.at("labels_before"))
            refinement->labels_before.push_back(v.get<int>() - 1);
        for (const auto& v : ref.at("labels_after"))
            refinement->labels_after.push_back(v.get<int>() - 1);
        for (const auto& v : ref.at("switched")) refinement->switched.push_back(v.get<int>() - 1);
        refinement->delta_threshold = ref.at("delta_threshold").get<double>();
        refinement->profile_losses = matrix_from_json(ref.at("profile_losses"));
    }
    return fit;
}

std::string ConfigSection::get(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

long ConfigSection::get_int(const std::string& key, long fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : std::stol(it->second);
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : std::stod(it->second);
}

std::vector<double> ConfigSection::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& cell : split(get(key), ','))
        if (!trim(cell).empty()) out.push_back(std::stod(cell));
    return out;
}

std::vector<int> ConfigSection::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& cell : split(get(key), ','))
        if (!trim(cell).empty()) out.push_back(std::stoi(cell));
    return out;
}

std::vector<ConfigSection> load_config(const std::string& path) {
    auto in = open_in(path);
    std::map<std::string, std::string> defaults;
    std::vector<ConfigSection> sections;
    ConfigSection* current = nullptr;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            ConfigSection section;
            section.name = trim(line.substr(1, line.size() - 2));
            section.values = defaults;
            sections.push_back(std::move(section));
            current = &sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (current)
            current->values[key] = value;
        else
            defaults[key] = value;
    }
    if (sections.empty()) {
        ConfigSection section;
        section.name = "run";
        section.values = defaults;
        sections.push_back(std::move(section));
    }
    return sections;
}

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> out;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const int lo = std::stoi(text.substr(0, colon));
        const int hi = std::stoi(text.substr(colon + 1));
        for (int g = lo; g <= hi; ++g) out.push_back(g);
        return out;
    }
    for (const auto& cell : split(text, ','))
        if (!trim(cell).empty()) out.push_back(std::stoi(cell));
    return out;
}

}  // namespace gnar
