#pragma once

#include <Eigen/Core>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sid/common.hpp"
#include "sid/problems.hpp"

namespace sid {

// ---------------------------------------------------------------------------
// Run configuration: sectioned key = value text, matrices as bracketed rows.
// ---------------------------------------------------------------------------

struct ProblemSpec {
    std::string kind = "quadratic";
    Mat a = Mat::Identity(1, 1);
    Vec b = Vec::Zero(1);
    double param = 0.0;          // l1 weight / huber delta
    double moreau_lambda = 1e-3;
    std::string samples_csv;     // optional: rows of features..., label
    Vec x0 = Vec::Zero(1);
    Vec v0 = Vec::Zero(1);

    bool operator==(const ProblemSpec& o) const {
        return kind == o.kind && a == o.a && b == o.b && param == o.param &&
               moreau_lambda == o.moreau_lambda && samples_csv == o.samples_csv && x0 == o.x0 &&
               v0 == o.v0;
    }
};

struct DampingSpec {
    std::string kind = "power";  // power | constant
    double alpha = 4.0;
    double c = 1.0;
    double t0 = 1.0;

    bool operator==(const DampingSpec& o) const {
        return kind == o.kind && alpha == o.alpha && c == o.c && t0 == o.t0;
    }
};

struct DiffusionSpec {
    std::string kind = "zero";  // zero | constant | power | exponential
    double c = 0.0;
    double q = 0.0;
    double a = 0.0;

    bool operator==(const DiffusionSpec& o) const {
        return kind == o.kind && c == o.c && q == o.q && a == o.a;
    }
};

struct TikhonovSpec {
    bool enabled = false;
    double r = 0.9;

    bool operator==(const TikhonovSpec& o) const { return enabled == o.enabled && r == o.r; }
};

struct GridSpec {
    double t0 = 1.0;
    double horizon = 1000.0;
    double h = 1e-2;

    bool operator==(const GridSpec& o) const {
        return t0 == o.t0 && horizon == o.horizon && h == o.h;
    }
};

struct RunConfig {
    std::string scenario = "simulate";
    ProblemSpec problem;
    DampingSpec damping;
    DiffusionSpec diffusion;
    TikhonovSpec tikhonov;
    GridSpec grid;
    int paths = 64;
    uint64_t seed = 42;
    std::string out = "runs";
    std::string mode = "inertial";  // rates: first_order | scaled | inertial
    double s0 = 1.0;
    double window_fraction = 0.4;
    double target_slope = -2.0;
    double slope_tol = 0.3;
    double mu = 1.0;        // pl scenario
    double h0 = 1e-2;       // consistency / transform-check base step
    int n_halvings = 4;
    double t_end = 3.0;     // consistency / transform-check horizon

    bool operator==(const RunConfig& o) const {
        return scenario == o.scenario && problem == o.problem && damping == o.damping &&
               diffusion == o.diffusion && tikhonov == o.tikhonov && grid == o.grid &&
               paths == o.paths && seed == o.seed && out == o.out && mode == o.mode &&
               s0 == o.s0 && window_fraction == o.window_fraction &&
               target_slope == o.target_slope && slope_tol == o.slope_tol && mu == o.mu &&
               h0 == o.h0 && n_halvings == o.n_halvings && t_end == o.t_end;
    }
};

// ---------------------------------------------------------------------------
// Parsing.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number from '" + v + "'");
    }
}

inline std::vector<double> parse_number_list(const std::string& key, const std::string& body) {
    std::vector<double> out;
    std::string cur;
    for (char ch : body) {
        if (ch == ',') {
            if (!trim(cur).empty()) out.push_back(parse_double(key, trim(cur)));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) out.push_back(parse_double(key, trim(cur)));
    return out;
}

/// "[1, 2, 3]" -> vector; "[[1,0],[0,1]]" -> matrix rows.
inline Mat parse_matrix(const std::string& key, const std::string& v) {
    std::string s = trim(v);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ConfigError("config key '" + key + "': expected bracketed list, got '" + v + "'");
    std::string inner = trim(s.substr(1, s.size() - 2));
    std::vector<std::vector<double>> rows;
    if (!inner.empty() && inner.front() == '[') {
        std::size_t i = 0;
        while (i < inner.size()) {
            if (inner[i] == '[') {
                std::size_t j = inner.find(']', i);
                if (j == std::string::npos)
                    throw ConfigError("config key '" + key + "': unbalanced brackets");
                rows.push_back(parse_number_list(key, inner.substr(i + 1, j - i - 1)));
                i = j + 1;
            } else {
                ++i;
            }
        }
    } else {
        rows.push_back(parse_number_list(key, inner));
    }
    if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix literal");
    Mat m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw ConfigError("config key '" + key + "': ragged matrix rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

inline Vec parse_vector(const std::string& key, const std::string& v) {
    Mat m = parse_matrix(key, v);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.cols() == 1) return m.col(0);
    throw ConfigError("config key '" + key + "': expected a vector literal");
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

inline std::string fmt(const Vec& v) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v[i]);
    os << "]";
    return os.str();
}

inline std::string fmt(const Mat& m) {
    std::ostringstream os;
    os << "[";
    for (int r = 0; r < m.rows(); ++r) {
        os << (r ? ", [" : "[");
        for (int c = 0; c < m.cols(); ++c) os << (c ? ", " : "") << fmt(m(r, c));
        os << "]";
    }
    os << "]";
    return os.str();
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "problem" && section != "damping" && section != "diffusion" &&
                section != "tikhonov" && section != "grid" && section != "run")
                throw ConfigError("unknown config section '" + section + "'");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        std::string qual = section.empty() ? key : section + "." + key;

        if (qual == "scenario") cfg.scenario = val;
        else if (qual == "problem.kind") cfg.problem.kind = val;
        else if (qual == "problem.a") cfg.problem.a = detail::parse_matrix(qual, val);
        else if (qual == "problem.b") cfg.problem.b = detail::parse_vector(qual, val);
        else if (qual == "problem.param") cfg.problem.param = detail::parse_double(qual, val);
        else if (qual == "problem.moreau_lambda")
            cfg.problem.moreau_lambda = detail::parse_double(qual, val);
        else if (qual == "problem.samples_csv") cfg.problem.samples_csv = val;
        else if (qual == "problem.x0") cfg.problem.x0 = detail::parse_vector(qual, val);
        else if (qual == "problem.v0") cfg.problem.v0 = detail::parse_vector(qual, val);
        else if (qual == "damping.kind") cfg.damping.kind = val;
        else if (qual == "damping.alpha") cfg.damping.alpha = detail::parse_double(qual, val);
        else if (qual == "damping.c") cfg.damping.c = detail::parse_double(qual, val);
        else if (qual == "damping.t0") cfg.damping.t0 = detail::parse_double(qual, val);
        else if (qual == "diffusion.kind") cfg.diffusion.kind = val;
        else if (qual == "diffusion.c") cfg.diffusion.c = detail::parse_double(qual, val);
        else if (qual == "diffusion.q") cfg.diffusion.q = detail::parse_double(qual, val);
        else if (qual == "diffusion.a") cfg.diffusion.a = detail::parse_double(qual, val);
        else if (qual == "tikhonov.enabled") cfg.tikhonov.enabled = (val == "true" || val == "1");
        else if (qual == "tikhonov.r") cfg.tikhonov.r = detail::parse_double(qual, val);
        else if (qual == "grid.t0") cfg.grid.t0 = detail::parse_double(qual, val);
        else if (qual == "grid.horizon") cfg.grid.horizon = detail::parse_double(qual, val);
        else if (qual == "grid.h") cfg.grid.h = detail::parse_double(qual, val);
        else if (qual == "run.paths") cfg.paths = static_cast<int>(detail::parse_double(qual, val));
        else if (qual == "run.seed")
            cfg.seed = static_cast<uint64_t>(detail::parse_double(qual, val));
        else if (qual == "run.out") cfg.out = val;
        else if (qual == "run.mode") cfg.mode = val;
        else if (qual == "run.s0") cfg.s0 = detail::parse_double(qual, val);
        else if (qual == "run.window_fraction")
            cfg.window_fraction = detail::parse_double(qual, val);
        else if (qual == "run.target_slope") cfg.target_slope = detail::parse_double(qual, val);
        else if (qual == "run.slope_tol") cfg.slope_tol = detail::parse_double(qual, val);
        else if (qual == "run.mu") cfg.mu = detail::parse_double(qual, val);
        else if (qual == "run.h0") cfg.h0 = detail::parse_double(qual, val);
        else if (qual == "run.n_halvings")
            cfg.n_halvings = static_cast<int>(detail::parse_double(qual, val));
        else if (qual == "run.t_end") cfg.t_end = detail::parse_double(qual, val);
        else throw ConfigError("unknown config key '" + qual + "'");
    }
    return cfg;
}

/// SID_SEED overrides the configured seed when set.
inline void apply_env_overrides(RunConfig& cfg) {
    if (const char* env_seed = std::getenv("SID_SEED"))
        cfg.seed = std::strtoull(env_seed, nullptr, 10);
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    using detail::fmt;
    os << "scenario = " << c.scenario << "\n\n";
    os << "[problem]\n";
    os << "kind = " << c.problem.kind << "\n";
    os << "a = " << fmt(c.problem.a) << "\n";
    os << "b = " << fmt(c.problem.b) << "\n";
    os << "param = " << fmt(c.problem.param) << "\n";
    os << "moreau_lambda = " << fmt(c.problem.moreau_lambda) << "\n";
    if (!c.problem.samples_csv.empty()) os << "samples_csv = " << c.problem.samples_csv << "\n";
    os << "x0 = " << fmt(c.problem.x0) << "\n";
    os << "v0 = " << fmt(c.problem.v0) << "\n\n";
    os << "[damping]\n";
    os << "kind = " << c.damping.kind << "\n";
    os << "alpha = " << fmt(c.damping.alpha) << "\n";
    os << "c = " << fmt(c.damping.c) << "\n";
    os << "t0 = " << fmt(c.damping.t0) << "\n\n";
    os << "[diffusion]\n";
    os << "kind = " << c.diffusion.kind << "\n";
    os << "c = " << fmt(c.diffusion.c) << "\n";
    os << "q = " << fmt(c.diffusion.q) << "\n";
    os << "a = " << fmt(c.diffusion.a) << "\n\n";
    os << "[tikhonov]\n";
    os << "enabled = " << (c.tikhonov.enabled ? "true" : "false") << "\n";
    os << "r = " << fmt(c.tikhonov.r) << "\n\n";
    os << "[grid]\n";
    os << "t0 = " << fmt(c.grid.t0) << "\n";
    os << "horizon = " << fmt(c.grid.horizon) << "\n";
    os << "h = " << fmt(c.grid.h) << "\n\n";
    os << "[run]\n";
    os << "paths = " << c.paths << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out = " << c.out << "\n";
    os << "mode = " << c.mode << "\n";
    os << "s0 = " << fmt(c.s0) << "\n";
    os << "window_fraction = " << fmt(c.window_fraction) << "\n";
    os << "target_slope = " << fmt(c.target_slope) << "\n";
    os << "slope_tol = " << fmt(c.slope_tol) << "\n";
    os << "mu = " << fmt(c.mu) << "\n";
    os << "h0 = " << fmt(c.h0) << "\n";
    os << "n_halvings = " << c.n_halvings << "\n";
    os << "t_end = " << fmt(c.t_end) << "\n";
    return os.str();
}

}  // namespace sid
