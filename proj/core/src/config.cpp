#include "fockctl/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fockctl {

using nlohmann::json;

namespace {

Scheme scheme_from_string(const std::string& s) {
    if (s == "euler-maruyama") return Scheme::EulerMaruyama;
    if (s == "stochastic-heun") return Scheme::StochasticHeun;
    if (s == "kraus") return Scheme::KrausMap;
    throw std::invalid_argument("integrator.scheme: unknown value '" + s + "'");
}

std::string scheme_to_string(Scheme s) {
    switch (s) {
        case Scheme::EulerMaruyama: return "euler-maruyama";
        case Scheme::StochasticHeun: return "stochastic-heun";
        case Scheme::KrausMap: return "kraus";
    }
    return "kraus";
}

EfficiencyMode mode_from_string(const std::string& s) {
    if (s == "purity-preserving") return EfficiencyMode::PurityPreserving;
    if (s == "literal-eq6") return EfficiencyMode::LiteralEq6;
    throw std::invalid_argument("channels.efficiency_mode: unknown value '" + s + "'");
}

std::string mode_to_string(EfficiencyMode m) {
    return m == EfficiencyMode::PurityPreserving ? "purity-preserving" : "literal-eq6";
}

template <typename T>
void get_to_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    get_to_if(j, "run_id", c.run_id);
    get_to_if(j, "seed", c.seed);
    get_to_if(j, "out_dir", c.out_dir);

    if (j.contains("env")) {
        const json& e = j.at("env");
        get_to_if(e, "dim", c.env.dim);
        get_to_if(e, "n_max", c.env.n_max);
        get_to_if(e, "beta_max_T", c.env.beta_mult);
        get_to_if(e, "theta", c.env.theta);
        get_to_if(e, "control_channels", c.env.control_channels);
        if (e.contains("target")) {
            c.env.target.components.clear();
            for (const json& comp : e.at("target"))
                c.env.target.components.push_back(
                    {comp.at("n").get<int>(),
                     cplx(comp.value("re", 0.0), comp.value("im", 0.0))});
        }
    }
    if (j.contains("channels")) {
        const json& ch = j.at("channels");
        get_to_if(ch, "num_channels", c.env.channels.num_channels);
        get_to_if(ch, "gamma_meas_T", c.env.channels.gamma_meas);
        if (ch.contains("efficiency_mode"))
            c.env.channels.mode = mode_from_string(ch.at("efficiency_mode"));
    } else {
        c.env.channels.num_channels = c.env.dim;
    }
    if (j.contains("noise")) {
        get_to_if(j.at("noise"), "gamma_decay", c.env.noise.gamma_decay);
        get_to_if(j.at("noise"), "gamma_dephasing", c.env.noise.gamma_dephasing);
    }
    if (j.contains("integrator")) {
        const json& in = j.at("integrator");
        get_to_if(in, "n_sub", c.env.integ.n_sub);
        if (in.contains("scheme")) c.env.integ.scheme = scheme_from_string(in.at("scheme"));
    }
    c.env.integ.dt = 1.0 / c.env.n_max;  // T_max = 1

    if (j.contains("ppo")) {
        const json& p = j.at("ppo");
        get_to_if(p, "gamma", c.ppo.gamma);
        get_to_if(p, "lam", c.ppo.lam);
        get_to_if(p, "n_steps", c.ppo.n_steps);
        get_to_if(p, "n_envs", c.ppo.n_envs);
        get_to_if(p, "clip", c.ppo.clip);
        get_to_if(p, "ent_coef", c.ppo.ent_coef);
        get_to_if(p, "vf_coef", c.ppo.vf_coef);
        get_to_if(p, "max_grad_norm", c.ppo.max_grad_norm);
        get_to_if(p, "lr", c.ppo.lr);
        get_to_if(p, "n_minibatches", c.ppo.n_minibatches);
        get_to_if(p, "n_epochs", c.ppo.n_epochs);
        get_to_if(p, "total_updates", c.ppo.total_updates);
        get_to_if(p, "sigma", c.ppo.sigma);
        get_to_if(p, "normalize_advantages", c.ppo.normalize_advantages);
        get_to_if(p, "eval_every", c.ppo.eval_every);
        get_to_if(p, "eval_n_traj", c.ppo.eval_n_traj);
        get_to_if(p, "stop_fidelity", c.ppo.stop_fidelity);
        get_to_if(p, "max_episodes", c.ppo.max_episodes);
    }
    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        get_to_if(b, "strategy", c.baseline.strategy);
        get_to_if(b, "runs", c.baseline.runs);
        get_to_if(b, "cutoff", c.baseline.cutoff);
        get_to_if(b, "max_iters", c.baseline.max_iters);
        get_to_if(b, "grid_re", c.baseline.greedy.n_re);
        get_to_if(b, "grid_im", c.baseline.greedy.n_im);
        c.baseline.greedy.beta_max = c.env.beta_mult;
        get_to_if(b, "grid_beta_max", c.baseline.greedy.beta_max);
    } else {
        c.baseline.greedy.beta_max = c.env.beta_mult;
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (s.contains("axes")) {
            for (const json& ax : s.at("axes")) {
                SweepAxis a;
                a.path = ax.at("path").get<std::string>();
                for (const json& v : ax.at("values")) a.values.push_back(v.get<double>());
                c.sweep.axes.push_back(std::move(a));
            }
        }
        if (s.contains("seeds")) {
            c.sweep.seeds.clear();
            for (const json& v : s.at("seeds"))
                c.sweep.seeds.push_back(v.get<std::uint64_t>());
        }
        get_to_if(s, "n_traj", c.sweep.n_traj);
        get_to_if(s, "greedy", c.sweep.greedy);
    }
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    json target = json::array();
    for (const auto& [n, amp] : env.target.components)
        target.push_back({{"n", n}, {"re", std::real(amp)}, {"im", std::imag(amp)}});
    j["env"] = {{"dim", env.dim},
                {"n_max", env.n_max},
                {"beta_max_T", env.beta_mult},
                {"theta", env.theta},
                {"control_channels", env.control_channels},
                {"target", target}};
    j["channels"] = {{"num_channels", env.channels.num_channels},
                     {"gamma_meas_T", env.channels.gamma_meas},
                     {"efficiency_mode", mode_to_string(env.channels.mode)}};
    j["noise"] = {{"gamma_decay", env.noise.gamma_decay},
                  {"gamma_dephasing", env.noise.gamma_dephasing}};
    j["integrator"] = {{"n_sub", env.integ.n_sub},
                       {"scheme", scheme_to_string(env.integ.scheme)}};
    j["ppo"] = {{"gamma", ppo.gamma},
                {"lam", ppo.lam},
                {"n_steps", ppo.n_steps},
                {"n_envs", ppo.n_envs},
                {"clip", ppo.clip},
                {"ent_coef", ppo.ent_coef},
                {"vf_coef", ppo.vf_coef},
                {"max_grad_norm", ppo.max_grad_norm},
                {"lr", ppo.lr},
                {"n_minibatches", ppo.n_minibatches},
                {"n_epochs", ppo.n_epochs},
                {"total_updates", ppo.total_updates},
                {"sigma", ppo.sigma},
                {"normalize_advantages", ppo.normalize_advantages},
                {"eval_every", ppo.eval_every},
                {"eval_n_traj", ppo.eval_n_traj},
                {"stop_fidelity", ppo.stop_fidelity},
                {"max_episodes", ppo.max_episodes}};
    j["baseline"] = {{"strategy", baseline.strategy},
                     {"runs", baseline.runs},
                     {"cutoff", baseline.cutoff},
                     {"max_iters", baseline.max_iters},
                     {"grid_re", baseline.greedy.n_re},
                     {"grid_im", baseline.greedy.n_im},
                     {"grid_beta_max", baseline.greedy.beta_max}};
    json axes = json::array();
    for (const auto& ax : sweep.axes)
        axes.push_back({{"path", ax.path}, {"values", ax.values}});
    j["sweep"] = {{"axes", axes},
                  {"seeds", sweep.seeds},
                  {"n_traj", sweep.n_traj},
                  {"greedy", sweep.greedy}};
    return j;
}

RunConfig RunConfig::from_json_with_overrides(json j,
                                              const std::vector<std::string>& overrides) {
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override: expected path=value, got '" + ov + "'");
        const std::string path = ov.substr(0, eq);
        const std::string value = ov.substr(eq + 1);
        json* node = &j;
        std::stringstream ss(path);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ss, part, '.')) parts.push_back(part);
        if (parts.empty()) throw std::invalid_argument("override: empty path");
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
        json parsed = json::parse(value, nullptr, false);
        (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
    }
    RunConfig c = from_json(j);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    return from_json_with_overrides(std::move(j), overrides);
}

void RunConfig::validate() const {
    env.validate();
    ppo.validate();
    if (baseline.strategy != "strong" && baseline.strategy != "greedy")
        throw std::invalid_argument("baseline.strategy: must be 'strong' or 'greedy'");
    if (baseline.runs < 0) throw std::invalid_argument("baseline.runs: must be >= 0");
    if (baseline.cutoff < 2) throw std::invalid_argument("baseline.cutoff: must be >= 2");
    if (sweep.axes.size() > 2)
        throw std::invalid_argument("sweep.axes: at most 2 axes supported");
    if (sweep.seeds.empty()) throw std::invalid_argument("sweep.seeds: need >= 1 seed");
}

std::string RunConfig::fingerprint() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace fockctl
