#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fockctl/baselines.hpp"
#include "fockctl/checkpoint.hpp"
#include "fockctl/config.hpp"
#include "fockctl/csv.hpp"
#include "fockctl/env.hpp"
#include "fockctl/fock.hpp"
#include "fockctl/ppo.hpp"
#include "fockctl/rng.hpp"

namespace fs = std::filesystem;
using namespace fockctl;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
    int workers = 1;
    bool deterministic = false;
    int n_traj = 50;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_config) {
    auto* cfg = cmd->add_option("--config", a.config_path, "run config (JSON)");
    if (needs_config) cfg->required();
    cmd->add_option("--seed", a.seed, "override the config seed");
    cmd->add_option("--out", a.out, "output root (default $FOCKCTL_OUT or cwd)");
    cmd->add_option("--workers", a.workers, "max concurrent jobs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--override", a.overrides, "config override path=value")
        ->take_all();
    cmd->add_flag("--deterministic", a.deterministic, "use the policy mean, no sampling");
    cmd->add_option("--n-traj", a.n_traj, "trajectories per evaluation")
        ->check(CLI::PositiveNumber);
}

RunConfig load_config(const CommonArgs& a) {
    RunConfig cfg = RunConfig::load(a.config_path, a.overrides);
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    return cfg;
}

fs::path make_run_dir(const CommonArgs& a, const RunConfig& cfg) {
    fs::path root;
    if (!a.out.empty()) {
        root = a.out;
    } else if (!cfg.out_dir.empty()) {
        root = cfg.out_dir;
    } else if (const char* env_out = std::getenv("FOCKCTL_OUT")) {
        root = env_out;
    } else {
        root = ".";
    }
    const fs::path dir = root / cfg.run_id;
    fs::create_directories(dir);
    std::ofstream out(dir / "config.json");
    out << cfg.to_json().dump(1) << "\n";
    return dir;
}

Checkpoint make_checkpoint(const TrainResult& res, const RunConfig& cfg) {
    Checkpoint ck;
    ck.policy = res.policy;
    ck.value_net = res.value_net;
    ck.adam_policy = res.adam_policy;
    ck.adam_value = res.adam_value;
    ck.config_hash = cfg.fingerprint();
    ck.seed = cfg.seed;
    return ck;
}

const char* kTrainLogHeader =
    "update,env_steps,mean_return_norm,mean_final_fidelity,policy_loss,value_loss,"
    "clip_frac,approx_kl,grad_norm";

void write_log_row(CsvWriter& w, const TrainLogRow& r) {
    w.field(r.update);
    w.field(r.env_steps);
    w.field(r.mean_return_norm);
    w.field(r.mean_final_fidelity);
    w.field(r.policy_loss);
    w.field(r.value_loss);
    w.field(r.clip_frac);
    w.field(r.approx_kl);
    w.field(r.grad_norm);
    w.endrow();
}

int cmd_train(const CommonArgs& a) {
    const RunConfig cfg = load_config(a);
    const fs::path dir = make_run_dir(a, cfg);
    CsvWriter log(dir / "training_log.csv", kTrainLogHeader);
    const std::string ckpt_path = (dir / "checkpoint.json").string();

    TrainResult res = train(
        cfg.env, cfg.ppo, cfg.seed,
        [&](const TrainLogRow& row, const TrainResult& partial) {
            write_log_row(log, row);
            if (row.update % 50 == 0) make_checkpoint(partial, cfg).save(ckpt_path);
        });
    make_checkpoint(res, cfg).save(ckpt_path);
    std::cout << dir.string() << "\n";
    if (res.aborted) {
        std::cerr << "fockctl: training aborted: " << res.abort_reason << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

std::string traj_header(int dim, int channels) {
    std::ostringstream h;
    h << "step,t,re_beta,im_beta";
    for (int k = 0; k < channels; ++k) h << ",gate_" << k;
    h << ",fidelity,purity";
    for (int n = 0; n < dim; ++n) h << ",p_" << n;
    for (int k = 0; k < channels; ++k) h << ",rec_" << k;
    return h.str();
}

void write_trajectory(const fs::path& path, const TrajectoryLog& traj, int dim,
                      int channels) {
    CsvWriter w(path, traj_header(dim, channels));
    for (const TrajStepRow& r : traj) {
        w.field(r.step);
        w.field(r.t);
        w.field(r.re_beta);
        w.field(r.im_beta);
        for (int k = 0; k < channels; ++k) w.field(r.gates[k]);
        w.field(r.fidelity);
        w.field(r.purity);
        for (int n = 0; n < dim; ++n) w.field(r.populations[n]);
        for (int k = 0; k < channels; ++k) w.field(r.records[k]);
        w.endrow();
    }
}

void write_wigner(const fs::path& path, const Mat& rho, double half_range, int points) {
    std::vector<double> xs(points);
    for (int i = 0; i < points; ++i)
        xs[i] = -half_range + 2.0 * half_range * i / (points - 1);
    const Eigen::MatrixXd w = wigner_grid(rho, xs, xs);
    CsvWriter out(path, "x,p,w");
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) {
            out.field(xs[i]);
            out.field(xs[j]);
            out.field(w(i, j));
            out.endrow();
        }
}

int cmd_eval(const CommonArgs& a, const std::string& checkpoint_path,
             const std::string& emit_spec, double wigner_range, int wigner_points) {
    const RunConfig cfg = load_config(a);
    if (!fs::exists(checkpoint_path))
        throw std::invalid_argument("checkpoint: no such file '" + checkpoint_path + "'");
    const Checkpoint ck = Checkpoint::load(checkpoint_path);
    if (ck.config_hash != cfg.fingerprint())
        std::cerr << "fockctl: warning: checkpoint was trained under a different config"
                  << " (hash " << ck.config_hash << " vs " << cfg.fingerprint() << ")\n";
    const fs::path dir = make_run_dir(a, cfg);

    std::vector<std::string> emit;
    std::stringstream ss(emit_spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) emit.push_back(tok);
    auto emits = [&](const std::string& what) {
        return std::find(emit.begin(), emit.end(), what) != emit.end();
    };
    const int dim = cfg.env.dim;
    const int channels = cfg.env.channels.num_channels;

    std::function<void(int, const TrajectoryLog&)> sink;
    if (emits("traj"))
        sink = [&](int t, const TrajectoryLog& traj) {
            char name[32];
            std::snprintf(name, sizeof(name), "traj_%03d.csv", t);
            write_trajectory(dir / name, traj, dim, channels);
        };

    const EvalStats stats =
        evaluate(ck.policy, cfg.env, a.n_traj, a.deterministic, cfg.seed, sink);

    if (emits("hist")) {
        CsvWriter w(dir / "final_fidelities.csv", "traj,final_fidelity");
        for (int t = 0; t < stats.n_traj; ++t) {
            w.field(t);
            w.field(stats.final_fidelities[t]);
            w.endrow();
        }
    }
    if (emits("avg")) {
        std::ostringstream h;
        h << "step,t";
        for (int n = 0; n < dim; ++n) h << ",p_" << n;
        CsvWriter w(dir / "mean_populations.csv", h.str());
        for (int s = 0; s < stats.mean_populations.rows(); ++s) {
            w.field(s);
            w.field(s * cfg.env.integ.dt);
            for (int n = 0; n < dim; ++n) w.field(stats.mean_populations(s, n));
            w.endrow();
        }
    }
    if (emits("wigner")) {
        for (std::size_t i = 0; i < stats.mean_states.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "wigner_%zu.csv", i);
            write_wigner(dir / name, stats.mean_states[i], wigner_range, wigner_points);
        }
    }
    json summary = {{"n_traj", stats.n_traj},
                    {"mean_final_fidelity", stats.mean_final_fidelity},
                    {"std_final_fidelity", stats.std_final_fidelity}};
    std::ofstream(dir / "eval_summary.json") << summary.dump(1) << "\n";
    std::cout << "mean_final_fidelity " << stats.mean_final_fidelity << " +/- "
              << stats.std_final_fidelity << "\n";
    return kExitOk;
}

struct SweepRow {
    double axis1 = 0.0, axis2 = 0.0;
    std::uint64_t seed = 0;
    double mean = std::nan("");
    double stdev = std::nan("");
    std::string strategy;
};

int cmd_sweep(const CommonArgs& a) {
    const RunConfig base = load_config(a);
    if (base.sweep.axes.empty())
        throw std::invalid_argument("sweep.axes: need at least 1 axis");
    const fs::path dir = make_run_dir(a, base);
    const SweepSpec& spec = base.sweep;
    const SweepAxis& ax1 = spec.axes[0];
    const std::vector<double> ax2_values =
        spec.axes.size() > 1 ? spec.axes[1].values : std::vector<double>{0.0};

    struct Job {
        double v1, v2;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double v1 : ax1.values)
        for (double v2 : ax2_values)
            for (std::uint64_t s : spec.seeds) jobs.push_back({v1, v2, s});

    const int rows_per_job = spec.greedy ? 2 : 1;
    std::vector<SweepRow> rows(jobs.size() * rows_per_job);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> had_failure{false};

    auto run_job = [&](std::size_t j) {
        const Job& job = jobs[j];
        SweepRow rl{job.v1, job.v2, job.seed, std::nan(""), std::nan(""), "rl"};
        SweepRow gr{job.v1, job.v2, job.seed, std::nan(""), std::nan(""), "greedy"};
        try {
            json cj = base.to_json();
            std::vector<std::string> ovs = {ax1.path + "=" + std::to_string(job.v1)};
            if (spec.axes.size() > 1)
                ovs.push_back(spec.axes[1].path + "=" + std::to_string(job.v2));
            RunConfig cell = RunConfig::from_json_with_overrides(cj, ovs);
            cell.seed = job.seed;

            TrainResult res = train(cell.env, cell.ppo, cell.seed);
            if (res.aborted) throw std::runtime_error(res.abort_reason);
            const EvalStats st =
                evaluate(res.policy, cell.env, spec.n_traj, true, cell.seed);
            rl.mean = st.mean_final_fidelity;
            rl.stdev = st.std_final_fidelity;

            if (spec.greedy) {
                double sum = 0.0, sum2 = 0.0;
                for (int t = 0; t < spec.n_traj; ++t) {
                    const double f =
                        greedy_episode(cell.env, cell.baseline.greedy, cell.seed, t);
                    sum += f;
                    sum2 += f * f;
                }
                gr.mean = sum / spec.n_traj;
                gr.stdev = std::sqrt(std::max(0.0, sum2 / spec.n_traj - gr.mean * gr.mean));
            }
        } catch (const std::exception& e) {
            had_failure = true;
            std::cerr << "fockctl: sweep cell (" << job.v1 << ", " << job.v2 << ", seed "
                      << job.seed << ") failed: " << e.what() << "\n";
        }
        rows[j * rows_per_job] = rl;
        if (spec.greedy) rows[j * rows_per_job + 1] = gr;
    };

    const int workers = std::max(1, std::min<int>(a.workers, jobs.size()));
    if (workers == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < jobs.size(); j = next++) run_job(j);
            });
        for (auto& t : pool) t.join();
    }

    CsvWriter w(dir / "sweep.csv",
                "axis1,axis2,seed,mean_final_fidelity,std_final_fidelity,strategy");
    for (const SweepRow& r : rows) {
        w.field(r.axis1);
        w.field(r.axis2);
        w.field(static_cast<unsigned long long>(r.seed));
        w.field(r.mean);
        w.field(r.stdev);
        w.field(r.strategy);
        w.endrow();
    }
    std::cout << (dir / "sweep.csv").string() << "\n";
    return had_failure ? kExitRuntime : kExitOk;
}

int cmd_map(const CommonArgs& a, const std::vector<std::string>& checkpoint_paths,
            int grid_points, double beta_mult) {
    if (checkpoint_paths.empty())
        throw std::invalid_argument("map: need at least one --checkpoint");
    std::vector<Checkpoint> cks;
    for (const std::string& p : checkpoint_paths) {
        if (!fs::exists(p))
            throw std::invalid_argument("checkpoint: no such file '" + p + "'");
        cks.push_back(Checkpoint::load(p));
    }
    const int obs_dim = cks.front().policy.mean_net.input_dim();
    const int act_dim = cks.front().policy.action_dim();
    for (const Checkpoint& c : cks)
        if (c.policy.mean_net.input_dim() != obs_dim || c.policy.action_dim() != act_dim)
            throw std::invalid_argument("map: checkpoints have mismatched architectures");
    const int dim = static_cast<int>(std::lround(std::sqrt(obs_dim / 2.0)));
    if (2 * dim * dim != obs_dim)
        throw std::invalid_argument("map: checkpoint input is not a 2N^2 observation");
    if (dim < 4)
        throw std::invalid_argument("map: need N >= 4 for the x|1>+...|2>+y|3> family");

    fs::path root = !a.out.empty() ? fs::path(a.out)
                    : std::getenv("FOCKCTL_OUT") ? fs::path(std::getenv("FOCKCTL_OUT"))
                                                 : fs::path(".");
    fs::create_directories(root);
    std::ostringstream h;
    h << "x,y,valid,re_beta,im_beta";
    for (int k = 0; k + 2 < act_dim; ++k) h << ",gate_" << k;
    CsvWriter w(root / "policy_map.csv", h.str());

    auto clamp1 = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
    for (int i = 0; i < grid_points; ++i) {
        const double x = -1.0 + 2.0 * i / (grid_points - 1);
        for (int j = 0; j < grid_points; ++j) {
            const double y = -1.0 + 2.0 * j / (grid_points - 1);
            w.field(x);
            w.field(y);
            const double rem = 1.0 - x * x - y * y;
            if (rem < -1e-12) {
                w.field(0);
                for (int k = 0; k < act_dim; ++k) w.field(0.0);
                w.endrow();
                continue;
            }
            CVec psi = CVec::Zero(dim);
            psi[1] = x;
            psi[2] = std::sqrt(std::max(0.0, rem));
            psi[3] = y;
            const Mat rho = psi * psi.adjoint();
            const Eigen::VectorXd obs = encode_observation(rho);
            VectorXd mean = VectorXd::Zero(act_dim);
            for (const Checkpoint& c : cks) mean += c.policy.mean(obs);
            mean /= static_cast<double>(cks.size());
            w.field(1);
            w.field(beta_mult * clamp1(mean[0]));
            w.field(beta_mult * clamp1(mean[1]));
            for (int k = 2; k < act_dim; ++k) w.field(mean[k]);
            w.endrow();
        }
    }
    std::cout << (root / "policy_map.csv").string() << "\n";
    return kExitOk;
}

int cmd_baseline(const CommonArgs& a) {
    const RunConfig cfg = load_config(a);
    const fs::path dir = make_run_dir(a, cfg);
    const int target = cfg.env.target.max_index();
    CsvWriter w(dir / "baseline.csv",
                "target,strategy,run,success,iterations,final_fidelity");

    if (cfg.baseline.strategy == "strong") {
        const AlphaTable table = build_alpha_table(cfg.baseline.cutoff);
        std::vector<long> success_by_iter(cfg.baseline.max_iters + 1, 0);
        for (int run = 0; run < cfg.baseline.runs; ++run) {
            auto rng = make_stream(cfg.seed, run, 0xBA5Eull);
            const StrongMeasureResult r = strong_measure_run(
                target, table, cfg.baseline.cutoff, cfg.baseline.max_iters, rng);
            w.field(target);
            w.field(std::string("strong"));
            w.field(run);
            w.field(r.success ? 1 : 0);
            w.field(r.iterations);
            w.field(r.success ? 1.0 : 0.0);
            w.endrow();
            if (r.success)
                for (int k = r.iterations; k <= cfg.baseline.max_iters; ++k)
                    ++success_by_iter[k];
        }
        CsvWriter s(dir / "baseline_summary.csv", "target,iteration,cum_success_prob");
        for (int k = 0; k <= cfg.baseline.max_iters; ++k) {
            s.field(target);
            s.field(k);
            s.field(static_cast<double>(success_by_iter[k]) /
                    std::max(1, cfg.baseline.runs));
            s.endrow();
        }
        std::cout << "strong target " << target << " success_prob "
                  << static_cast<double>(success_by_iter[cfg.baseline.max_iters]) /
                         std::max(1, cfg.baseline.runs)
                  << "\n";
    } else {
        double sum = 0.0;
        for (int run = 0; run < cfg.baseline.runs; ++run) {
            const double f =
                greedy_episode(cfg.env, cfg.baseline.greedy, cfg.seed, run);
            w.field(target);
            w.field(std::string("greedy"));
            w.field(run);
            w.field(1);
            w.field(cfg.env.n_max);
            w.field(f);
            w.endrow();
            sum += f;
        }
        std::cout << "greedy target " << target << " mean_final_fidelity "
                  << sum / std::max(1, cfg.baseline.runs) << "\n";
    }
    return kExitOk;
}

int cmd_validate(const CommonArgs& a) {
    const RunConfig cfg = load_config(a);
    std::cout << "ok " << cfg.fingerprint() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fockctl: cavity Fock-state preparation by measurement feedback"};
    app.require_subcommand(1);

    CommonArgs targs, eargs, sargs, margs, bargs, vargs;
    std::string eval_checkpoint;
    std::string eval_emit = "traj,hist,avg,wigner";
    double wigner_range = 5.0;
    int wigner_points = 41;
    std::vector<std::string> map_checkpoints;
    int map_grid = 41;
    double map_beta_mult = 20.0;

    auto* train_cmd = app.add_subcommand("train", "train a PPO agent");
    add_common(train_cmd, targs, true);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd, eargs, true);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint JSON")->required();
    eval_cmd->add_option("--emit", eval_emit, "comma list of traj,hist,avg,wigner");
    eval_cmd->add_option("--wigner-range", wigner_range, "grid half-width in x and p");
    eval_cmd->add_option("--wigner-points", wigner_points, "grid points per axis");

    auto* sweep_cmd = app.add_subcommand("sweep", "train/eval over a parameter grid");
    add_common(sweep_cmd, sargs, true);

    auto* map_cmd = app.add_subcommand("map", "policy map over the (x,y) state family");
    add_common(map_cmd, margs, false);
    map_cmd->add_option("--checkpoint", map_checkpoints, "checkpoint JSON (repeatable)")
        ->required()
        ->take_all();
    map_cmd->add_option("--grid-points", map_grid, "points per axis over [-1,1]");
    map_cmd->add_option("--beta-mult", map_beta_mult, "drive scale for reported beta");

    auto* base_cmd = app.add_subcommand("baseline", "analytic baseline strategies");
    add_common(base_cmd, bargs, true);

    auto* val_cmd = app.add_subcommand("validate-config", "parse and validate a config");
    add_common(val_cmd, vargs, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(targs);
        if (eval_cmd->parsed())
            return cmd_eval(eargs, eval_checkpoint, eval_emit, wigner_range,
                            wigner_points);
        if (sweep_cmd->parsed()) return cmd_sweep(sargs);
        if (map_cmd->parsed())
            return cmd_map(margs, map_checkpoints, map_grid, map_beta_mult);
        if (base_cmd->parsed()) return cmd_baseline(bargs);
        if (val_cmd->parsed()) return cmd_validate(vargs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "fockctl: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "fockctl: runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
