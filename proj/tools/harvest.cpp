// Copyright 2026 The Harvest Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// harvest: train, evaluate, plan and plot multi-agent data harvesting runs.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harvest/baselines.hpp"
#include "harvest/eval.hpp"
#include "harvest/ppo.hpp"
#include "harvest/scenario.hpp"
#include "harvest/smooth.hpp"
#include "harvest/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace harvest::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand.
struct Common {
  std::string scenario = "builtin:config1";
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario, "Scenario JSON file or builtin:config1|builtin:config2");
  app->add_option("--seed", c.seed, "Seed for all randomness");
  app->add_option("--set", c.overrides, "Override key=value (repeatable), e.g. ppo.learning_steps=50");
  app->add_option("--out", c.out, "Output directory (default: $HARVEST_OUT or ./runs, plus the run id)");
}

// ---------------------------------------------------------------------------
// --set key=value

struct Configs {
  PpoConfig ppo;
  SmoothConfig smooth;
  DqnConfig dqn;
  AStarOptions astar;
};

std::vector<int> parse_widths(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw std::invalid_argument("empty layer list");
  return out;
}

using Setter = std::function<void(Configs&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto d = [](auto field) {
      return Setter([field](Configs& c, const std::string& v) { field(c) = std::stod(v); });
    };
    auto i = [](auto field) {
      return Setter([field](Configs& c, const std::string& v) { field(c) = std::stoi(v); });
    };
#define HARVEST_D(key, expr) t[key] = d([](Configs& c) -> auto& { return expr; })
#define HARVEST_I(key, expr) t[key] = i([](Configs& c) -> auto& { return expr; })
    HARVEST_D("ppo.gamma", c.ppo.gamma);
    HARVEST_D("ppo.gae_lambda", c.ppo.gae_lambda);
    HARVEST_D("ppo.clip_ratio", c.ppo.clip_ratio);
    HARVEST_D("ppo.value_coef", c.ppo.value_coef);
    HARVEST_D("ppo.entropy_coef", c.ppo.entropy_coef);
    HARVEST_I("ppo.epochs", c.ppo.epochs);
    HARVEST_I("ppo.minibatch_size", c.ppo.minibatch_size);
    HARVEST_I("ppo.rollout_steps", c.ppo.rollout_steps);
    HARVEST_D("ppo.actor_lr", c.ppo.actor_lr);
    HARVEST_D("ppo.critic_lr", c.ppo.critic_lr);
    HARVEST_I("ppo.learning_steps", c.ppo.learning_steps);
    HARVEST_D("ppo.large_penalty", c.ppo.large_penalty);
    HARVEST_D("ppo.lambda_travel", c.ppo.multipliers[0]);
    HARVEST_D("ppo.lambda_data", c.ppo.multipliers[1]);
    HARVEST_D("ppo.position_tolerance", c.ppo.position_tolerance);
    HARVEST_D("ppo.data_tolerance", c.ppo.data_tolerance);
    HARVEST_D("ppo.reward_scale", c.ppo.reward_scale);
    HARVEST_D("ppo.max_grad_norm", c.ppo.max_grad_norm);
    HARVEST_D("ppo.init_std", c.ppo.init_std);
    HARVEST_I("ppo.substeps", c.ppo.substeps);
    HARVEST_D("ppo.target_kl", c.ppo.target_kl);
    HARVEST_D("smooth.weight", c.smooth.weight);
    HARVEST_I("smooth.adversary_steps", c.smooth.adversary_steps);
    HARVEST_D("smooth.adversary_lr", c.smooth.adversary_lr);
    HARVEST_D("smooth.epsilon", c.smooth.epsilon);
    HARVEST_I("dqn.replay_capacity", c.dqn.replay_capacity);
    HARVEST_I("dqn.sync_interval", c.dqn.sync_interval);
    HARVEST_D("dqn.epsilon_start", c.dqn.epsilon_start);
    HARVEST_D("dqn.epsilon_end", c.dqn.epsilon_end);
    HARVEST_I("dqn.epsilon_decay_steps", c.dqn.epsilon_decay_steps);
    HARVEST_D("dqn.gamma", c.dqn.gamma);
    HARVEST_D("dqn.learning_rate", c.dqn.learning_rate);
    HARVEST_I("dqn.batch_size", c.dqn.batch_size);
    HARVEST_D("dqn.step_length", c.dqn.step_length);
    HARVEST_I("dqn.total_steps", c.dqn.total_steps);
    HARVEST_I("dqn.learning_starts", c.dqn.learning_starts);
    HARVEST_I("dqn.train_every", c.dqn.train_every);
    HARVEST_D("dqn.reward_scale", c.dqn.reward_scale);
    HARVEST_D("dqn.position_tolerance", c.dqn.position_tolerance);
    HARVEST_D("astar.step_length", c.astar.step_length);
    HARVEST_D("astar.data_quantum", c.astar.data_quantum);
    HARVEST_I("astar.substeps", c.astar.substeps);
#undef HARVEST_D
#undef HARVEST_I
    t["astar.budget"] = [](Configs& c, const std::string& v) { c.astar.budget = std::stol(v); };
    t["ppo.scheme"] = [](Configs& c, const std::string& v) { c.ppo.scheme = parse_scheme(v); };
    t["ppo.discount_corrected_penalty"] = [](Configs& c, const std::string& v) {
      c.ppo.discount_corrected_penalty = (v == "1" || v == "true");
    };
    t["ppo.hidden"] = [](Configs& c, const std::string& v) { c.ppo.hidden = parse_widths(v); };
    t["smooth.hidden"] = [](Configs& c, const std::string& v) { c.smooth.hidden = parse_widths(v); };
    t["smooth.divergence"] = [](Configs& c, const std::string& v) { c.smooth.divergence = parse_divergence(v); };
    t["dqn.hidden"] = [](Configs& c, const std::string& v) { c.dqn.hidden = parse_widths(v); };
    return t;
  }();
  return table;
}

void apply_overrides(Configs& c, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    auto it = setters().find(key);
    if (it == setters().end()) throw UsageError("unknown --set key '" + key + "'");
    try {
      it->second(c, kv.substr(eq + 1));
    } catch (const std::logic_error& e) {
      throw UsageError("bad value for '" + key + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Run directory and manifest.

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// 12 hex digits from the wall clock and a nondeterministic source; unique per
// invocation and independent of --seed.
std::string make_run_id() {
  std::random_device rd;
  const auto ticks = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  std::uint64_t h = ticks ^ (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return buf;
}

class Run {
 public:
  Run(const std::string& command, const Common& c, json extra = json::object()) {
    id_ = make_run_id();
    if (!c.out.empty()) {
      dir_ = c.out;
    } else {
      const char* root = std::getenv("HARVEST_OUT");
      dir_ = fs::path(root && *root ? root : "runs") / (command + "-" + id_);
    }
    fs::create_directories(dir_);
    manifest_ = {{"command", command},     {"scenario", c.scenario}, {"overrides", c.overrides},
                 {"seed", c.seed},         {"output_dir", dir_.string()}, {"run_id", id_},
                 {"started_at", now_iso()}, {"status", "running"}};
    manifest_.update(extra);
    write_manifest();
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void finish(json results = json::object()) {
    manifest_["status"] = "done";
    manifest_["finished_at"] = now_iso();
    manifest_["results"] = std::move(results);
    write_manifest();
  }

 private:
  void write_manifest() const {
    std::ofstream out(dir_ / "manifest.json");
    out << manifest_.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir_ / "manifest.json").string());
  }

  std::string id_;
  fs::path dir_;
  json manifest_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_ppo_curve(const fs::path& p, const std::vector<CurvePoint>& curve) {
  std::ostringstream s;
  s.precision(17);
  s << "learning_step,mean_steps,std_steps,success_rate\n";
  for (const auto& c : curve) s << c.learning_step << ',' << c.mean_steps << ',' << c.std_steps << ',' << c.success_rate << '\n';
  write_text(p, s.str());
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ScenarioConfig load_scenario(const Common& c) { return load(c.scenario); }

// ---------------------------------------------------------------------------
// Commands.

struct TrainArgs {
  std::string scheme = "lagrangian";
  bool smooth = false;
  double eps = 0.05;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  Configs cfg;
  cfg.ppo.scheme = parse_scheme(a.scheme);
  cfg.smooth.epsilon = a.eps;
  apply_overrides(cfg, c.overrides);
  cfg.ppo.validate();
  if (a.smooth) cfg.smooth.validate();
  const auto scenario = load_scenario(c);
  Run run("train", c, {{"scheme", to_string(cfg.ppo.scheme)}, {"smooth", a.smooth}});

  auto progress = [&](int k, const CurvePoint& p) {
    if ((k + 1) % 10 == 0 || k + 1 == cfg.ppo.learning_steps)
      std::cerr << "step " << k + 1 << "/" << cfg.ppo.learning_steps << " mean_steps " << fmt2(p.mean_steps)
                << " success " << fmt2(p.success_rate) << '\n';
  };
  nn::Checkpoint ckpt;
  TrainResult result;
  if (a.smooth) {
    auto r = train_smooth(scenario, cfg.ppo, cfg.smooth, c.seed, progress);
    store(ckpt, r.adversary);
    nn::Checkpoint adv;
    store(adv, r.adversary);
    nn::write_checkpoint(run.path("adversary.ckpt").string(), adv);
    result = std::move(r.policy);
  } else {
    result = train(scenario, cfg.ppo, c.seed, progress);
  }
  store(ckpt, result.actor, result.critic);
  nn::write_checkpoint(run.path("policy.ckpt").string(), ckpt);
  write_ppo_curve(run.path("curve.csv"), result.curve);

  GoalSpec goal = GoalSpec::from(scenario);
  goal.position_tolerance = cfg.ppo.position_tolerance;
  goal.data_tolerance = cfg.ppo.data_tolerance;
  const auto ev = evaluate_deterministic(result.actor, scenario, goal, cfg.ppo.substeps);
  write_trajectory_csv(run.path("trajectory.csv").string(), ev.rollout);
  std::cout << "deterministic: steps " << ev.steps << " success " << (ev.success ? 1 : 0) << " T "
            << fmt2(ev.completion.time) << '\n';
  run.finish({{"steps", ev.steps}, {"success", ev.success}, {"completion_time", ev.completion.time}});
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string adversary;
  std::string noise = "none";
  double eps = 0.0;
  int trials = 100;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  Configs cfg;
  apply_overrides(cfg, c.overrides);
  NoiseSpec noise;
  noise.kind = parse_noise_kind(a.noise);
  noise.epsilon = a.eps;
  if (!fs::exists(a.checkpoint)) throw std::runtime_error("policy checkpoint not found: " + a.checkpoint);
  const auto policy_ckpt = nn::read_checkpoint(a.checkpoint);
  if (noise.kind == NoiseKind::kAdversarial) {
    if (!a.adversary.empty()) {
      if (!fs::exists(a.adversary)) throw std::runtime_error("adversary checkpoint not found: " + a.adversary);
      noise.adversary = restore_adversary(nn::read_checkpoint(a.adversary));
    } else if (policy_ckpt.count("adversary/widths")) {
      noise.adversary = restore_adversary(policy_ckpt);
    } else {
      throw std::runtime_error("adversarial noise needs an adversary checkpoint (--adversary)");
    }
  }
  noise.validate();
  const auto scenario = load_scenario(c);
  Run run("eval", c,
          {{"checkpoint", a.checkpoint}, {"noise", to_string(noise.kind)}, {"eps", a.eps}, {"trials", a.trials}});
  GoalSpec goal = GoalSpec::from(scenario);
  goal.position_tolerance = cfg.ppo.position_tolerance;
  goal.data_tolerance = cfg.ppo.data_tolerance;
  const Actor actor = restore_actor(policy_ckpt);
  const auto report = evaluate(actor_policy(actor, scenario), scenario, goal, noise, a.trials, c.seed, cfg.ppo.substeps);
  std::ofstream trials(run.path("report.csv"));
  write_report_csv(trials, report);
  std::ofstream summary(run.path("summary.csv"));
  write_summary_csv(summary, report);
  std::cout << to_string(noise.kind) << " eps " << a.eps << ": " << fmt2(report.mean) << " ± "
            << fmt2(report.std_dev) << " (success " << fmt2(report.success_rate()) << ", " << report.trials()
            << " trials)\n";
  run.finish({{"mean", report.mean}, {"std", report.std_dev}, {"success_rate", report.success_rate()}});
  return 0;
}

struct AttackArgs {
  std::string checkpoint;
  int rounds = 40;
};

int cmd_attack(const Common& c, const AttackArgs& a) {
  Configs cfg;
  apply_overrides(cfg, c.overrides);
  cfg.smooth.validate();
  if (!fs::exists(a.checkpoint)) throw std::runtime_error("policy checkpoint not found: " + a.checkpoint);
  const Actor actor = restore_actor(nn::read_checkpoint(a.checkpoint));
  const auto scenario = load_scenario(c);
  Run run("attack", c, {{"checkpoint", a.checkpoint}, {"rounds", a.rounds}});
  const Adversary adv = train_attack(actor, scenario, cfg.ppo, cfg.smooth, c.seed, a.rounds);
  nn::Checkpoint ckpt;
  store(ckpt, adv);
  nn::write_checkpoint(run.path("adversary.ckpt").string(), ckpt);
  run.finish();
  return 0;
}

int cmd_plan_astar(const Common& c) {
  Configs cfg;
  apply_overrides(cfg, c.overrides);
  const auto scenario = load_scenario(c);
  Run run("plan-astar", c);
  const auto r = astar_plan(scenario, cfg.astar);
  write_trajectory_csv(run.path("trajectory.csv").string(), r.rollout);
  std::ostringstream inc;
  inc.precision(17);
  inc << "expansions,completion_time\n";
  for (const auto& [n, t] : r.diagnostics.incumbent_curve) inc << n << ',' << t << '\n';
  write_text(run.path("incumbents.csv"), inc.str());
  const auto& d = r.diagnostics;
  const json diag = {{"complete", r.complete},          {"completion_time", r.completion.time},
                     {"plan_length", r.plan.size()},    {"expansions", d.expansions},
                     {"generated", d.generated},        {"duplicates", d.duplicates},
                     {"max_open", d.max_open},          {"f_decreases", d.f_decreases}};
  write_text(run.path("diagnostics.json"), diag.dump(2) + "\n");
  std::cout << (r.complete ? "complete" : "incomplete") << ": plan " << r.plan.size() << " steps, T "
            << fmt2(r.completion.time) << ", " << d.expansions << " expansions\n";
  run.finish(diag);
  return 0;
}

int cmd_plan_dqn(const Common& c) {
  Configs cfg;
  apply_overrides(cfg, c.overrides);
  cfg.dqn.validate();
  const auto scenario = load_scenario(c);
  Run run("plan-dqn", c);
  const auto r = dqn_train(scenario, cfg.dqn, c.seed, [](const DqnCurvePoint& p) {
    if (p.episodes % 500 == 0)
      std::cerr << "env steps " << p.env_steps << " mean_steps " << fmt2(p.mean_steps) << " success "
                << fmt2(p.success_rate) << '\n';
  });
  nn::Checkpoint ckpt;
  store(ckpt, r.q_net, cfg.dqn.step_length);
  nn::write_checkpoint(run.path("q.ckpt").string(), ckpt);
  std::ostringstream s;
  s.precision(17);
  s << "env_steps,episodes,mean_steps,success_rate\n";
  for (const auto& p : r.curve) s << p.env_steps << ',' << p.episodes << ',' << p.mean_steps << ',' << p.success_rate << '\n';
  write_text(run.path("curve.csv"), s.str());
  write_trajectory_csv(run.path("trajectory.csv").string(), r.greedy_rollout);
  std::cout << "greedy: steps " << r.greedy_rollout.actions.size() << " success " << (r.completion.success ? 1 : 0)
            << " T " << fmt2(r.completion.time) << '\n';
  run.finish({{"completion_time", r.completion.time}, {"success", r.completion.success}});
  return 0;
}

struct PlotArgs {
  std::string trajectory;
  std::string output;
  double scale = 40.0;
};

int cmd_plot(const Common& c, const PlotArgs& a) {
  const auto scenario = load_scenario(c);
  std::vector<std::vector<Vec2>> tracks;
  if (!a.trajectory.empty()) {
    std::ifstream in(a.trajectory);
    if (!in) throw std::runtime_error("trajectory file not found: " + a.trajectory);
    try {
      tracks = read_trajectory_tracks(in);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(a.trajectory + ": " + e.what());
    }
  }
  Run run("plot", c, {{"trajectory", a.trajectory}});
  const fs::path out = a.output.empty() ? run.path("plot.svg") : fs::path(a.output);
  write_text(out, render_svg(scenario, tracks, a.scale));
  std::cout << out.string() << '\n';
  run.finish({{"svg", out.string()}});
  return 0;
}

// Sweep file: {"command": "train", "seeds": [..], "override_sets": [[..], ..],
// "scheme": "lagrangian", "smooth": false}. Runs every (override set, seed)
// pair in its own subdirectory and writes sweep.csv.
int cmd_sweep(const Common& c, const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("sweep file not found: " + file);
  json spec;
  try {
    spec = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(file + ": " + e.what());
  }
  if (spec.value("command", "train") != "train") throw UsageError("sweep supports only the train command");
  const auto seeds = spec.value("seeds", std::vector<std::uint64_t>{c.seed});
  auto sets = spec.value("override_sets", std::vector<std::vector<std::string>>{{}});
  if (sets.empty()) sets.push_back({});
  TrainArgs ta;
  ta.scheme = spec.value("scheme", ta.scheme);
  ta.smooth = spec.value("smooth", false);
  ta.eps = spec.value("eps", ta.eps);
  Run run("sweep", c, {{"sweep_file", file}});
  std::ostringstream table;
  table.precision(17);
  table << "set,seed,steps,success,completion_time\n";
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (auto seed : seeds) {
      Common sub = c;
      sub.seed = seed;
      sub.overrides.insert(sub.overrides.end(), sets[s].begin(), sets[s].end());
      sub.out = run.path("set" + std::to_string(s) + "-seed" + std::to_string(seed)).string();
      cmd_train(sub, ta);
      std::ifstream m(fs::path(sub.out) / "manifest.json");
      const json r = json::parse(m).at("results");
      table << s << ',' << seed << ',' << r.at("steps").get<int>() << ',' << (r.at("success").get<bool>() ? 1 : 0)
            << ',' << r.at("completion_time").get<double>() << '\n';
    }
  }
  write_text(run.path("sweep.csv"), table.str());
  run.finish();
  return 0;
}

int cmd_validate(const Common& c) {
  ScenarioConfig scenario;
  try {
    scenario = load(c.scenario);
  } catch (const ValidationError& e) {
    std::cout << "invalid: " << e.what() << '\n';
    return 2;
  }
  std::cout << "ok: " << scenario.num_targets() << " targets, " << scenario.num_agents() << " agents, n_max "
            << scenario.n_max << '\n';
  return 0;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Multi-agent data harvesting: PPO, smoothing, A* and DDQN baselines"};
  app.require_subcommand(1);
  Common common;

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a PPO policy");
  add_common(train, common);
  train->add_option("--scheme", train_args.scheme, "Terminal reward scheme")
      ->check(CLI::IsMember({"lagrangian", "large-terminal", "none"}));
  train->add_flag("--smooth", train_args.smooth, "Add the adversarial smoothing regularizer");
  train->add_option("--eps", train_args.eps, "Perturbation radius for smoothing");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a policy checkpoint under observation noise");
  add_common(eval, common);
  eval->add_option("--checkpoint", eval_args.checkpoint, "Policy checkpoint")->required();
  eval->add_option("--adversary", eval_args.adversary, "Adversary checkpoint for --noise adv");
  eval->add_option("--noise", eval_args.noise, "none|random|adv")->check(CLI::IsMember({"none", "random", "adv", "adversarial"}));
  eval->add_option("--eps", eval_args.eps, "Noise radius");
  eval->add_option("--trials", eval_args.trials, "Number of trials")->check(CLI::PositiveNumber);

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Train an adversary against a frozen policy");
  add_common(attack, common);
  attack->add_option("--checkpoint", attack_args.checkpoint, "Policy checkpoint")->required();
  attack->add_option("--rounds", attack_args.rounds, "Adversary training rounds")->check(CLI::PositiveNumber);

  auto* plan = app.add_subcommand("plan", "Run a baseline planner");
  plan->require_subcommand(1);
  auto* astar = plan->add_subcommand("astar", "Discretized A* search");
  add_common(astar, common);
  long budget = 0;
  astar->add_option("--budget", budget, "Expansion budget")->check(CLI::PositiveNumber);
  auto* dqn = plan->add_subcommand("dqn", "Double DQN on lattice moves");
  add_common(dqn, common);

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Render a trajectory CSV as SVG");
  add_common(plot, common);
  plot->add_option("--trajectory", plot_args.trajectory, "Trajectory CSV (omit for the scene only)");
  plot->add_option("--output", plot_args.output, "SVG path (default: run directory)");
  plot->add_option("--scale", plot_args.scale, "Pixels per world unit")->check(CLI::PositiveNumber);

  std::string sweep_file;
  auto* sweep = app.add_subcommand("sweep", "Run a multi-seed training sweep");
  add_common(sweep, common);
  sweep->add_option("file", sweep_file, "Sweep JSON")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return cmd_train(common, train_args);
    if (*eval) return cmd_eval(common, eval_args);
    if (*attack) return cmd_attack(common, attack_args);
    if (*astar) {
      if (budget > 0) common.overrides.push_back("astar.budget=" + std::to_string(budget));
      return cmd_plan_astar(common);
    }
    if (*dqn) return cmd_plan_dqn(common);
    if (*plot) return cmd_plot(common, plot_args);
    if (*sweep) return cmd_sweep(common, sweep_file);
    if (*validate_cmd) return cmd_validate(common);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace
}  // namespace harvest::cli

int main(int argc, char** argv) { return harvest::cli::run_main(argc, argv); }
