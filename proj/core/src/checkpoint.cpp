#include "fockctl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fockctl {

using nlohmann::json;

namespace {

Mlp mlp_from_sizes(const std::vector<int>& sizes) {
    Mlp p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        p.w.push_back(MatrixXd::Zero(sizes[l + 1], sizes[l]));
        p.b.push_back(VectorXd::Zero(sizes[l + 1]));
    }
    return p;
}

json adam_to_json(const AdamState& a) {
    return json{{"step", a.step},
                {"beta1", a.beta1},
                {"beta2", a.beta2},
                {"epsilon", a.epsilon},
                {"m", a.m.w.empty() ? std::vector<double>{} : a.m.flatten()},
                {"v", a.v.w.empty() ? std::vector<double>{} : a.v.flatten()}};
}

AdamState adam_from_json(const json& j, const Mlp& like) {
    AdamState a(like);
    j.at("step").get_to(a.step);
    j.at("beta1").get_to(a.beta1);
    j.at("beta2").get_to(a.beta2);
    j.at("epsilon").get_to(a.epsilon);
    const auto m = j.at("m").get<std::vector<double>>();
    const auto v = j.at("v").get<std::vector<double>>();
    if (!m.empty()) a.m.unflatten(m);
    if (!v.empty()) a.v.unflatten(v);
    return a;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    json j;
    j["arch"] = {{"activation", "tanh"},
                 {"policy", policy.mean_net.layer_sizes()},
                 {"value", value_net.layer_sizes()}};
    j["policy"] = policy.mean_net.flatten();
    j["value"] = value_net.flatten();
    j["sigma"] = std::vector<double>(policy.sigma.data(),
                                     policy.sigma.data() + policy.sigma.size());
    j["adam_policy"] = adam_to_json(adam_policy);
    j["adam_value"] = adam_to_json(adam_value);
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    out << j.dump(1) << "\n";
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    json j;
    in >> j;
    Checkpoint c;
    const auto policy_sizes = j.at("arch").at("policy").get<std::vector<int>>();
    const auto value_sizes = j.at("arch").at("value").get<std::vector<int>>();
    c.policy.mean_net = mlp_from_sizes(policy_sizes);
    c.policy.mean_net.unflatten(j.at("policy").get<std::vector<double>>());
    const auto sig = j.at("sigma").get<std::vector<double>>();
    c.policy.sigma = Eigen::Map<const VectorXd>(sig.data(), sig.size());
    c.value_net = mlp_from_sizes(value_sizes);
    c.value_net.unflatten(j.at("value").get<std::vector<double>>());
    c.adam_policy = adam_from_json(j.at("adam_policy"), c.policy.mean_net);
    c.adam_value = adam_from_json(j.at("adam_value"), c.value_net);
    j.at("config_hash").get_to(c.config_hash);
    j.at("seed").get_to(c.seed);
    return c;
}

}  // namespace fockctl
