// Copyright 2025 The namopush Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "namo/config.hpp"
#include "namo/metrics.hpp"
#include "namo/selfcheck.hpp"
#include "namo/train.hpp"

namespace namo {
namespace {

MethodVariant variant_or_throw(const std::string& s) {
  MethodVariant v;
  if (!parse_variant(s, &v))
    throw std::invalid_argument("unknown variant '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(tok);
  return out;
}

int cmd_train_low(std::uint64_t seed, int steps, const std::string& variant,
                  const Config& conf, const std::string& out) {
  const MethodVariant v = variant_or_throw(variant);
  if (v != MethodVariant::Ours && v != MethodVariant::OursMinusP)
    throw std::invalid_argument(
        "train-low: --variant must be 'ours' (privileged) or 'ours-p'");
  LowTrainConfig cfg;
  cfg.seed = seed;
  cfg.iters = steps;
  cfg.use_privileged = v == MethodVariant::Ours;
  cfg.n_envs = static_cast<int>(conf.get_int("n_envs", cfg.n_envs));
  cfg.horizon = static_cast<int>(conf.get_int("horizon", cfg.horizon));
  cfg.ppo.lr = conf.get_double("lr", cfg.ppo.lr);
  cfg.verbose = true;
  cfg.log_path = out + ".low.csv";
  LowTrainResult res = train_low(cfg);

  PolicyBundle b = make_full_bundle(seed);
  b.low = std::move(res.policy);
  if (cfg.use_privileged) {
    EstimatorTrainConfig ecfg;
    ecfg.seed = seed + 1;
    ecfg.train_episodes =
        static_cast<int>(conf.get_int("estimator_episodes", ecfg.train_episodes));
    ecfg.epochs = static_cast<int>(conf.get_int("estimator_epochs", ecfg.epochs));
    ecfg.verbose = true;
    ecfg.log_path = out + ".ex.csv";
    train_estimator(*b.ex, ecfg);
    const auto holdout = make_holdout_pushes(100, seed + 2);
    const DistillStats st = distill_eval(*b.ex, holdout);
    std::cout << "estimator holdout mse " << st.mse << " (label variance "
              << label_variance_baseline(holdout) << ") contact acc "
              << st.contact_accuracy << std::endl;
  }
  b.save(out);
  std::cout << "saved bundle " << out << " (curriculum extent "
            << res.grid.p_extent() << "/" << res.grid.theta_extent() << ")"
            << std::endl;
  return 0;
}

int cmd_train_high(std::uint64_t seed, int steps, const std::string& variant,
                   const Config& conf, const std::string& in,
                   const std::string& out) {
  const MethodVariant v = variant_or_throw(variant);
  if (v != MethodVariant::Ours && v != MethodVariant::OursMinusH)
    throw std::invalid_argument(
        "train-high: --variant must be 'ours' (hierarchical) or 'ours-h'");
  PolicyBundle b = load_bundle(in);
  HighTrainConfig cfg;
  cfg.seed = seed;
  cfg.iters = steps;
  cfg.e2e = v == MethodVariant::OursMinusH;
  cfg.n_envs = static_cast<int>(conf.get_int("n_envs", cfg.n_envs));
  cfg.horizon = static_cast<int>(conf.get_int("horizon", cfg.horizon));
  cfg.ppo.lr = conf.get_double("lr", cfg.ppo.lr);
  cfg.verbose = true;
  cfg.log_path = out + (cfg.e2e ? ".e2e.csv" : ".high.csv");
  train_high(b, cfg);
  b.save(out);
  std::cout << "saved bundle " << out << std::endl;
  return 0;
}

int cmd_eval(std::uint64_t seed, int trials, const std::string& variants,
             const Config& conf, const std::string& in, const std::string& out) {
  SuiteConfig cfg;
  cfg.variants.clear();
  for (const std::string& v : split_csv(variants))
    cfg.variants.push_back(variant_or_throw(v));
  cfg.maps = split_csv(conf.get_string("maps", "corridor,room"));
  cfg.counts.clear();
  for (const std::string& c : split_csv(conf.get_string("counts", "2,4,6")))
    cfg.counts.push_back(std::stoi(c));
  cfg.trials = trials;
  cfg.seed0 = seed;
  cfg.verbose = true;

  PolicyBundle bundle;
  PolicyBundle* bp = nullptr;
  if (!in.empty()) {
    bundle = load_bundle(in);
    bp = &bundle;
  }
  const SuiteResult res = run_suite(cfg, bp);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("eval: cannot open " + out);
    f << res.csv;
  } else {
    std::cout << res.csv;
  }
  std::printf("%-10s %-7s %-7s %6s %7s %7s %9s %8s\n", "map", "n_obst",
              "variant", "SR%", "SPL", "SCT", "len(m)", "time(s)");
  for (const GroupMetrics& g : res.groups)
    std::printf("%-10s %-7d %-7s %6.1f %7.3f %7.3f %5.2f+-%.2f %5.1f+-%.1f\n",
                g.map.c_str(), g.n_obst, to_string(g.variant), g.sr, g.spl,
                g.sct, g.mean_length, g.sd_length, g.mean_time, g.sd_time);
  return 0;
}

int cmd_plot(std::uint64_t seed, const std::string& variant, const Config& conf,
             const std::string& in, const std::string& out) {
  const MethodVariant v = variant_or_throw(variant);
  const std::string map_name = conf.get_string("map", "corridor");
  const int n = static_cast<int>(conf.get_int("n_obst", 2));
  World w = build_eval_scenario(map_name, n, seed);
  conf.apply(&w.cfg);

  PolicyBundle bundle;
  PolicyBundle* bp = nullptr;
  if (!in.empty()) {
    bundle = load_bundle(in);
    bp = &bundle;
  }
  const EpisodeRecord rec = run_episode(w, v, bp);
  const std::string svg = plot_traces(rec, w.map);
  std::ofstream f(out);
  if (!f) throw std::runtime_error("plot: cannot open " + out);
  f << svg;
  std::cout << "wrote " << out << " (" << map_name << " n=" << n << " "
            << to_string(v) << " seed=" << seed << ": "
            << (rec.success ? "success" : to_string(rec.fail_reason)) << ")"
            << std::endl;
  return 0;
}

int cmd_gradcheck() {
  const double p = gradcheck_policy();
  const double e = gradcheck_estimator();
  const double m = gradcheck_encoder();
  const double worst = std::max({p, e, m});
  std::printf("gradcheck policy    max rel err %.3e\n", p);
  std::printf("gradcheck estimator max rel err %.3e\n", e);
  std::printf("gradcheck encoder   max rel err %.3e\n", m);
  std::printf("gradcheck overall   max rel err %.3e (%s)\n", worst,
              worst < 1e-4 ? "pass" : "FAIL");
  return worst < 1e-4 ? 0 : 1;
}

int cmd_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::printf("selftest: %-32s %s\n", name, ok ? "ok" : "FAIL");
    failures += ok ? 0 : 1;
  };

  const Config c = Config::parse("dt = 0.01\nk_low_3 = 7\n");
  check("config parse", c.get_double("dt", 0) == 0.01 &&
                            c.get_double("k_low_3", 0) == 7.0);

  check("spl hand value", spl({{true, 10.0}}, 5.0) == 0.5);

  World w;
  w.map = eval_map("corridor");
  const EpisodeRecord r1 = run_episode(w, MethodVariant::CA, nullptr);
  const EpisodeRecord r2 = run_episode(w, MethodVariant::CA, nullptr);
  check("tracker reaches corridor goal", r1.success);
  check("episode determinism",
        r1.base_trace.size() == r2.base_trace.size() &&
            r1.length_m == r2.length_m && r1.time_s == r2.time_s);

  const World blocked = build_eval_scenario("corridor", 2, 42);
  const EpisodeRecord rc = run_episode(blocked, MethodVariant::CA, nullptr);
  check("avoidance blocked in corridor",
        !rc.success && rc.fail_reason == TerminationReason::NoFeasiblePath);

  PolicyBundle b1 = make_full_bundle(3);
  const std::string tmp = "/tmp/namo_selftest_bundle.bin";
  b1.save(tmp);
  PolicyBundle b2 = make_full_bundle(99);
  b2.load(tmp);
  const VecX probe = VecX::Constant(PolicyBundle::kLowPolicyIn, 0.1);
  check("bundle save/load round trip",
        (b1.low->forward(probe).mean - b2.low->forward(probe).mean).norm() == 0.0);
  std::remove(tmp.c_str());

  std::printf("selftest: %s\n", failures == 0 ? "all ok" : "FAILURES");
  return failures == 0 ? 0 : 1;
}

int run(int argc, char** argv) {
  CLI::App app{
      "namo: whole-body pushing navigation - training, evaluation, plotting"};
  app.require_subcommand(1);

  std::string config_path, variant = "ours", out, in;
  std::uint64_t seed = 1;
  int steps = -1;

  const auto add_common = [&](CLI::App* sub, bool with_variant = true) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "RNG seed");
    if (with_variant)
      sub->add_option("--variant", variant,
                      "ca | aa | ours | ours-p | ours-h | ours+g");
    sub->add_option("--out", out, "output path");
    sub->add_option("--steps", steps, "iterations / trials");
  };

  CLI::App* tl = app.add_subcommand(
      "train-low", "train the low-level pushing policy (+ estimator)");
  add_common(tl);
  CLI::App* th = app.add_subcommand(
      "train-high", "train the high-level commander (or flat ablation)");
  add_common(th);
  th->add_option("--in", in, "input bundle from train-low")->required();
  CLI::App* ev =
      app.add_subcommand("eval", "run the evaluation suite, write a CSV");
  add_common(ev);
  ev->add_option("--in", in, "policy bundle (needed for learned variants)");
  CLI::App* pl =
      app.add_subcommand("plot", "render one episode trace as an SVG");
  add_common(pl);
  pl->add_option("--in", in, "policy bundle (needed for learned variants)");
  CLI::App* gc = app.add_subcommand(
      "gradcheck", "finite-difference check of all network gradients");
  add_common(gc, false);
  CLI::App* st = app.add_subcommand("selftest", "quick deterministic smoke test");
  add_common(st, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  const Config conf =
      config_path.empty() ? Config{} : Config::load(config_path);
  if (app.got_subcommand(tl)) {
    if (out.empty()) throw std::invalid_argument("train-low: --out is required");
    return cmd_train_low(seed, steps > 0 ? steps : 150, variant, conf, out);
  }
  if (app.got_subcommand(th)) {
    if (out.empty()) throw std::invalid_argument("train-high: --out is required");
    return cmd_train_high(seed, steps > 0 ? steps : 120, variant, conf, in, out);
  }
  if (app.got_subcommand(ev))
    return cmd_eval(seed == 1 ? 1000 : seed, steps > 0 ? steps : 25, variant,
                    conf, in, out);
  if (app.got_subcommand(pl)) {
    if (out.empty()) throw std::invalid_argument("plot: --out is required");
    return cmd_plot(seed, variant, conf, in, out);
  }
  if (app.got_subcommand(gc)) return cmd_gradcheck();
  return cmd_selftest();
}

}  // namespace
}  // namespace namo

int main(int argc, char** argv) {
  try {
    return namo::run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
