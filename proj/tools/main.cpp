#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdelearn/alm.hpp"
#include "pdelearn/diagnostics.hpp"
#include "pdelearn/metrics_io.hpp"
#include "pdelearn/problems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdelearn;

namespace {

std::string default_output_root() {
  if (const char* env = std::getenv("PDELEARN_OUTPUT_ROOT")) return env;
  return "runs";
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Problem names accept either underscores or hyphens.
std::string canonical(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

json summarize(const std::vector<json>& manifests) {
  json per_trial = json::array();
  std::vector<double> rl2, rl2s, li, ma, ms;
  for (const auto& m : manifests) {
    per_trial.push_back(m);
    if (!m.contains("metrics")) continue;
    const json& mm = m["metrics"];
    auto grab = [&](const char* key, std::vector<double>& into) {
      if (mm.contains(key) && mm[key].is_number()) into.push_back(mm[key].get<double>());
    };
    grab("rel_l2_u", rl2);
    grab("rel_l2_sigma", rl2s);
    grab("linf_u", li);
    grab("mae_u", ma);
    grab("mse_u", ms);
  }
  json medians{{"rel_l2_u", median(rl2)},
               {"linf_u", median(li)},
               {"mae_u", median(ma)},
               {"mse_u", median(ms)}};
  if (!rl2s.empty()) medians["rel_l2_sigma"] = median(rl2s);
  return json{{"trials", per_trial.size()}, {"median", medians}, {"runs", per_trial}};
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  os << j.dump(2) << '\n';
}

int cmd_train(const std::string& problem, int epochs, std::uint64_t seed, int trials,
              double mu_max, double huber_delta, double k, double alpha, int metric_every,
              const std::string& outdir) {
  ProblemSpec spec;
  try {
    spec = problem_by_name(canonical(problem), k, alpha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  fs::path root = fs::path(outdir) / spec.name;
  std::vector<json> manifests;
  bool any_failed = false;
  for (int t = 0; t < trials; ++t) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed + static_cast<std::uint64_t>(t);
    cfg.mu_max = mu_max;
    cfg.huber.delta = huber_delta;
    cfg.metric_every = metric_every;
    cfg.hook = [&](const EpochRow& row) {
      if (row.epoch % 100 == 0 || row.epoch == 1)
        std::cout << spec.name << " seed=" << cfg.seed << " epoch=" << row.epoch
                  << " loss=" << row.loss_total << "\n";
    };
    std::cout << "training " << spec.name << " (seed " << cfg.seed << ")\n";
    RunRecord rec = train(spec, cfg);
    fs::path dir = root / ("seed" + std::to_string(cfg.seed));
    save_run(rec, dir.string());
    std::ifstream is(dir / "manifest.json");
    json m;
    is >> m;
    manifests.push_back(std::move(m));
    if (rec.failed) {
      any_failed = true;
      std::cerr << "run failed: " << rec.failure << "\n";
    } else {
      std::cout << "  rel_l2_u=" << rec.final_row().rel_l2_u << "\n";
    }
  }
  write_json(root / "summary.json", summarize(manifests));
  std::cout << "summary: " << (root / "summary.json").string() << "\n";
  return any_failed ? 1 : 0;
}

int cmd_diagnose(int epochs, std::uint64_t base_seed, int seeds, double scale,
                 const std::string& outdir) {
  if (scale == 0.0)
    std::cerr << "warning: scale 0 produces an unperturbed model; the monotone-amplification "
                 "flag is vacuous\n";
  fs::path root = fs::path(outdir) / "diagnostics";
  bool all_monotone = true, all_grad_up = true;
  json runs = json::array();
  for (int s = 0; s < seeds; ++s) {
    std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
    auto spec = poisson1d_spec();
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    std::cout << "training poisson1d (seed " << seed << ")\n";
    RunRecord rec = train(spec, cfg);
    if (rec.failed) {
      std::cerr << "run failed: " << rec.failure << "\n";
      return 1;
    }
    auto tilde = perturb(rec.theta, spec.net, scale, stream_seed(seed, 2));
    auto rep = amplification_report(spec, rec.theta, tilde, 1000);
    fs::path dir = root / ("seed" + std::to_string(seed));
    save_run(rec, dir.string());
    write_perturbation_report(rep, (dir / "perturbation").string());
    runs.push_back(json{{"seed", seed},
                        {"monotone_mean", rep.summary.monotone_mean},
                        {"grad_increased", rep.summary.grad_increased},
                        {"mean_delta_u", rep.summary.mean_du},
                        {"mean_delta_ux", rep.summary.mean_dux},
                        {"mean_delta_uxx", rep.summary.mean_duxx}});
    if (scale > 0.0) {
      all_monotone = all_monotone && rep.summary.monotone_mean;
      all_grad_up = all_grad_up && rep.summary.grad_increased;
    }
  }
  write_json(root / "summary.json", json{{"scale", scale},
                                         {"monotone_amplification", all_monotone},
                                         {"gradient_increased", all_grad_up},
                                         {"runs", runs}});
  std::cout << "monotone amplification: " << (all_monotone ? "true" : "false") << "\n";
  return 0;
}

int cmd_condition(std::vector<double> alphas, const std::string& outdir) {
  for (double a : alphas)
    if (a <= 0.0) {
      std::cerr << "error: alpha must be positive\n";
      return 2;
    }
  fs::path root(outdir);
  std::error_code ec;
  fs::create_directories(root, ec);
  std::ofstream os(root / "condition.csv");
  if (!os) {
    std::cerr << "error: cannot write " << (root / "condition.csv").string() << "\n";
    return 1;
  }
  os.precision(17);
  os << "alpha,kappa\n";
  std::cout << "alpha,kappa\n";
  for (double a : alphas) {
    double kappa = convection_diffusion_condition(a);
    os << a << ',' << kappa << '\n';
    std::cout << a << ',' << kappa << '\n';
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  std::vector<json> manifests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    fs::path manifest = entry.path() / "manifest.json";
    if (!fs::exists(manifest)) continue;
    std::ifstream is(manifest);
    json m;
    try {
      is >> m;
    } catch (const json::exception&) {
      std::cerr << "warning: skipping malformed " << manifest.string() << "\n";
      continue;
    }
    manifests.push_back(std::move(m));
  }
  if (manifests.empty()) {
    std::cerr << "error: no run manifests under " << dir << "\n";
    return 1;
  }
  write_json(fs::path(dir) / "summary.json", summarize(manifests));
  std::cout << "summary over " << manifests.size() << " runs: " << dir << "/summary.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained PDE learning: training, diagnostics, and reports"};
  app.require_subcommand(1);
  std::string outdir = default_output_root();
  app.add_option("--output-dir", outdir,
                 "Output root (env PDELEARN_OUTPUT_ROOT overrides the default)")
      ->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train a problem and write run records");
  std::string problem;
  int epochs = -1, trials = 1, metric_every = 1;
  std::uint64_t seed = 0;
  double mu_max = -1.0, huber_delta = 1.0, k = 2.0, alpha = 1e-4;
  tr->add_option("--problem", problem,
                 "poisson1d | composite-heat | convection-diffusion | reaction-diffusion")
      ->required();
  tr->add_option("--epochs", epochs, "Override the problem's epoch preset");
  tr->add_option("--seed", seed, "Base seed; trial i uses seed+i")->capture_default_str();
  tr->add_option("--trials", trials, "Independent trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--mu-max", mu_max, "Penalty cap (default: problem preset)");
  tr->add_option("--huber-delta", huber_delta, "Huber transition point")->capture_default_str();
  tr->add_option("--k", k, "Composite-heat conductivity ratio")->capture_default_str();
  tr->add_option("--alpha", alpha, "Convection-diffusion diffusivity")->capture_default_str();
  tr->add_option("--metric-every", metric_every, "Epoch interval for error norms")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // diagnose
  auto* dg = app.add_subcommand("diagnose", "Noise-amplification study on poisson1d");
  int dg_epochs = 1000, dg_seeds = 1;
  std::uint64_t dg_seed = 0;
  double scale = 0.05;
  dg->add_option("--epochs", dg_epochs, "Training epochs before perturbing")
      ->capture_default_str();
  dg->add_option("--seed", dg_seed, "Base seed")->capture_default_str();
  dg->add_option("--seeds", dg_seeds, "Number of seeds to test")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dg->add_option("--scale", scale, "Perturbation scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  // condition
  auto* cn = app.add_subcommand("condition", "Condition-number sweep over diffusivities");
  std::vector<double> alphas = {1e-1, 1e-2, 1e-3, 1e-4};
  cn->add_option("--alpha", alphas, "Diffusivities to sweep")->capture_default_str();

  // report
  auto* rp = app.add_subcommand("report", "Regenerate summary.json from existing run dirs");
  std::string report_dir;
  rp->add_option("--dir", report_dir, "Directory containing run subdirectories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tr->parsed())
      return cmd_train(problem, epochs, seed, trials, mu_max, huber_delta, k, alpha,
                       metric_every, outdir);
    if (dg->parsed()) return cmd_diagnose(dg_epochs, dg_seed, dg_seeds, scale, outdir);
    if (cn->parsed()) return cmd_condition(alphas, outdir);
    if (rp->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
