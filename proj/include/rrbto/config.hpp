#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rrbto/benchmarks.hpp"
#include "rrbto/errors.hpp"
#include "rrbto/monte_carlo.hpp"
#include "rrbto/sora.hpp"

namespace rrbto {

/// Everything one CLI invocation needs: the optimization configuration, the
/// sweep lists, Monte Carlo validation options, and output placement.
struct RunSpec {
    std::string benchmark = "cantilever";
    RrbtoConfig config;
    std::vector<double> beta_list{1.0, 2.0, 3.0};
    std::vector<double> epsilon_list{1.0, 0.9, 0.8, 0.5, 0.2, 0.0};
    int mc_samples = 50000;
    std::uint64_t mc_seed = 0;
    McMode mc_mode = McMode::FullFea;
    std::string output_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const std::string& tok : split(v, ',')) out.push_back(parse_double(key, tok));
    return out;
}

}  // namespace detail

/// Parse flat `key = value` configuration text.  Lines are either blank,
/// full-line comments starting with '#', or a single assignment.  Unknown and
/// duplicated keys are errors; list values use commas within a tuple and
/// semicolons between tuples.
inline RunSpec parse_config_text(const std::string& text) {
    using detail::parse_double;
    using detail::parse_int;
    using detail::split;
    using detail::trim;

    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (!kv.emplace(key, val).second)
            throw ConfigError("config key '" + key + "' assigned more than once");
    }

    RunSpec spec;
    auto take = [&kv](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (auto v = take("benchmark")) spec.benchmark = *v;
    if (spec.benchmark != "cantilever" && spec.benchmark != "lbeam" && spec.benchmark != "custom")
        throw ConfigError("benchmark must be cantilever, lbeam, or custom");

    BenchmarkOptions opt;
    auto parse_node = [](const std::string& key, const std::string& v) {
        const auto parts = detail::split(v, ',');
        if (parts.size() != 2) throw ConfigError("config key '" + key + "': expected 'ix,iy'");
        return NodeRef{detail::parse_int(key, parts[0]), detail::parse_int(key, parts[1])};
    };
    if (auto v = take("point_a")) opt.point_a = parse_node("point_a", *v);
    if (auto v = take("point_b")) opt.point_b = parse_node("point_b", *v);
    if (auto v = take("u0")) opt.u0 = parse_double("u0", *v);
    if (auto v = take("gamma")) opt.gamma = parse_double("gamma", *v);

    if (spec.benchmark == "custom") {
        ProblemDef p;
        auto need = [&take](const std::string& key) {
            auto v = take(key);
            if (!v) throw ConfigError("benchmark=custom requires config key '" + key + "'");
            return *v;
        };
        p.nelx = parse_int("nelx", need("nelx"));
        p.nely = parse_int("nely", need("nely"));
        for (const std::string& tup : split(need("fixed_nodes"), ';')) {
            const NodeRef n = parse_node("fixed_nodes", tup);
            if (n.ix < 0 || n.ix > p.nelx || n.iy < 0 || n.iy > p.nely)
                throw ConfigError("fixed_nodes entry outside the mesh");
            p.fixed_dofs.push_back(2 * p.node_id(n.ix, n.iy));
            p.fixed_dofs.push_back(2 * p.node_id(n.ix, n.iy) + 1);
        }
        auto parse_dof = [&](const std::string& key, const std::string& tup, double* magnitude) {
            const auto parts = split(tup, ',');
            const size_t expect = magnitude ? 4 : 3;
            if (parts.size() != expect)
                throw ConfigError("config key '" + key + "': expected 'ix,iy," +
                                  std::string(magnitude ? "x|y,magnitude'" : "x|y'"));
            const int ix = parse_int(key, parts[0]);
            const int iy = parse_int(key, parts[1]);
            if (ix < 0 || ix > p.nelx || iy < 0 || iy > p.nely)
                throw ConfigError("config key '" + key + "': node outside the mesh");
            int dof = 2 * p.node_id(ix, iy);
            if (parts[2] == "y")
                dof += 1;
            else if (parts[2] != "x")
                throw ConfigError("config key '" + key + "': direction must be x or y");
            if (magnitude) *magnitude = parse_double(key, parts[3]);
            return dof;
        };
        for (const std::string& tup : split(need("loads"), ';')) {
            double mag = 0.0;
            const int dof = parse_dof("loads", tup, &mag);
            p.loads.push_back({dof, mag});
        }
        p.monitored_dof = parse_dof("monitor", need("monitor"), nullptr);
        if (auto v = take("passive_rects")) {
            p.passive.assign(static_cast<size_t>(p.nelx * p.nely), 0);
            for (const std::string& rect : split(*v, ';')) {
                const auto rngs = split(rect, ',');
                if (rngs.size() != 2)
                    throw ConfigError("passive_rects: expected 'ex0:ex1,ey0:ey1' per rectangle");
                int lo[2], hi[2];
                for (int axis = 0; axis < 2; ++axis) {
                    const auto ends = split(rngs[static_cast<size_t>(axis)], ':');
                    if (ends.size() != 2) throw ConfigError("passive_rects: ranges use 'lo:hi'");
                    lo[axis] = parse_int("passive_rects", ends[0]);
                    hi[axis] = parse_int("passive_rects", ends[1]);
                }
                if (lo[0] < 0 || hi[0] >= p.nelx || lo[1] < 0 || hi[1] >= p.nely)
                    throw ConfigError("passive_rects rectangle outside the mesh");
                for (int ex = lo[0]; ex <= hi[0]; ++ex)
                    for (int ey = lo[1]; ey <= hi[1]; ++ey)
                        p.passive[static_cast<size_t>(p.elem_id(ex, ey))] = 1;
            }
        }
        if (!opt.u0) throw ConfigError("benchmark=custom requires config key 'u0'");
        p.u0 = *opt.u0;
        if (opt.gamma) p.gamma = *opt.gamma;
        if (opt.point_a || opt.point_b)
            throw ConfigError("point_a/point_b apply to named benchmarks only; use 'loads'");
        spec.config.problem = p;
    } else {
        for (const char* key : {"nelx", "nely", "fixed_nodes", "loads", "monitor", "passive_rects"})
            if (kv.count(key))
                throw ConfigError("config key '" + std::string(key) + "' is only valid with benchmark=custom");
        spec.config.problem = build_benchmark(spec.benchmark, opt);
    }

    if (auto v = take("poisson")) spec.config.problem.poisson = parse_double("poisson", *v);

    if (auto v = take("penal")) spec.config.penal = parse_double("penal", *v);
    if (auto v = take("rho_min")) spec.config.rho_min = parse_double("rho_min", *v);
    if (auto v = take("r_min")) spec.config.r_min = parse_double("r_min", *v);
    if (auto v = take("n_mma")) spec.config.n_mma = parse_int("n_mma", *v);
    if (auto v = take("n_sora")) spec.config.n_sora = parse_int("n_sora", *v);
    if (auto v = take("d_mma")) spec.config.d_mma = parse_double("d_mma", *v);
    if (auto v = take("d_mpp")) spec.config.d_mpp = parse_double("d_mpp", *v);

    if (auto v = take("kl_l1")) spec.config.kl.l1 = parse_double("kl_l1", *v);
    if (auto v = take("kl_l2")) spec.config.kl.l2 = parse_double("kl_l2", *v);
    if (auto v = take("kl_modes")) spec.config.kl.M = parse_int("kl_modes", *v);
    if (auto v = take("kl_quad")) spec.config.kl.n_quad = parse_int("kl_quad", *v);
    if (auto v = take("modulus_a")) spec.config.kl.a = parse_double("modulus_a", *v);
    if (auto v = take("modulus_b")) spec.config.kl.b = parse_double("modulus_b", *v);
    if (auto v = take("kl_domain")) {
        if (*v == "physical")
            spec.config.kl.normalized_domain = false;
        else if (*v == "normalized")
            spec.config.kl.normalized_domain = true;
        else
            throw ConfigError("kl_domain must be physical or normalized");
    }

    if (auto v = take("sg_level")) spec.config.sg_level = parse_int("sg_level", *v);
    if (auto v = take("sg_growth")) {
        if (*v == "linear")
            spec.config.sg_growth = Growth::Linear;
        else if (*v == "odd")
            spec.config.sg_growth = Growth::Odd;
        else
            throw ConfigError("sg_growth must be linear or odd");
    }

    if (auto v = take("beta")) spec.config.beta = parse_double("beta", *v);
    if (auto v = take("epsilon")) spec.config.epsilon = parse_double("epsilon", *v);
    if (auto v = take("mu_star"))
        if (*v != "compute") spec.config.mu_star = parse_double("mu_star", *v);
    if (auto v = take("sigma_star"))
        if (*v != "compute") spec.config.sigma_star = parse_double("sigma_star", *v);

    if (auto v = take("beta_list")) spec.beta_list = detail::parse_double_list("beta_list", *v);
    if (auto v = take("epsilon_list"))
        spec.epsilon_list = detail::parse_double_list("epsilon_list", *v);
    if (spec.beta_list.empty() || spec.epsilon_list.empty())
        throw ConfigError("beta_list and epsilon_list must be non-empty");

    if (auto v = take("mc_samples")) spec.mc_samples = parse_int("mc_samples", *v);
    if (auto v = take("mc_seed")) spec.mc_seed = static_cast<std::uint64_t>(parse_int("mc_seed", *v));
    if (auto v = take("mc_mode")) {
        if (*v == "full")
            spec.mc_mode = McMode::FullFea;
        else if (*v == "surrogate")
            spec.mc_mode = McMode::Surrogate;
        else
            throw ConfigError("mc_mode must be full or surrogate");
    }
    if (spec.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
    if (auto v = take("output_dir")) spec.output_dir = *v;

    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");

    spec.config.validate();
    return spec;
}

inline RunSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace rrbto
