#include "pdelearn/metrics_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pdelearn {

namespace {
void check_sizes(std::span<const double> pred, std::span<const double> exact) {
  if (pred.size() != exact.size())
    throw std::invalid_argument("prediction and exact vectors differ in length");
  if (pred.empty()) throw std::invalid_argument("error norms need at least one sample");
}
}  // namespace

double rel_l2(std::span<const double> pred, std::span<const double> exact) {
  check_sizes(pred, exact);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - exact[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative L2 norm undefined: ||exact|| = 0");
  return std::sqrt(num / den);
}

double linf(std::span<const double> pred, std::span<const double> exact) {
  check_sizes(pred, exact);
  double m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) m = std::max(m, std::abs(pred[i] - exact[i]));
  return m;
}

double mae(std::span<const double> pred, std::span<const double> exact) {
  check_sizes(pred, exact);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - exact[i]);
  return s / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> exact) {
  check_sizes(pred, exact);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - exact[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  os.precision(17);
  return os;
}

void put_cell(std::ostream& os, double v) {
  if (std::isnan(v))
    ;  // skipped metric epochs leave the cell empty
  else
    os << v;
}

void write_history(const RunRecord& rec, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "epoch,loss_total,loss_data,loss_flux,loss_dirichlet,loss_neumann,loss_initial,"
        "mu,mu_next,max_lambda_F,max_lambda_B,max_lambda_N,max_lambda_I,grad_inf,"
        "inner_iters,func_evals,rejected,rel_l2_u,rel_l2_sigma,linf_u,mae_u,mse_u\n";
  for (const EpochRow& r : rec.history) {
    os << r.epoch << ',' << r.loss_total << ',' << r.loss_data << ',' << r.loss_flux << ','
       << r.loss_dirichlet << ',' << r.loss_neumann << ',' << r.loss_initial << ',' << r.mu << ','
       << r.mu_next << ',' << r.max_lambda_F << ',' << r.max_lambda_B << ',' << r.max_lambda_N
       << ',' << r.max_lambda_I << ',' << r.grad_inf << ',' << r.inner_iters << ','
       << r.func_evals << ',' << (r.rejected ? 1 : 0) << ',';
    put_cell(os, r.rel_l2_u);
    os << ',';
    put_cell(os, r.rel_l2_sigma);
    os << ',';
    put_cell(os, r.linf_u);
    os << ',';
    put_cell(os, r.mae_u);
    os << ',';
    put_cell(os, r.mse_u);
    os << '\n';
  }
}

void write_multipliers(const RunRecord& rec, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "family,index,value\n";
  auto dump = [&](const char* name, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << name << ',' << i << ',' << v[i] << '\n';
  };
  dump("lambda_F", rec.multipliers.lambda_F);
  dump("lambda_B", rec.multipliers.lambda_B);
  dump("lambda_N", rec.multipliers.lambda_N);
  dump("lambda_I", rec.multipliers.lambda_I);
  os << "mu,0," << rec.multipliers.mu << '\n';
  os << "mu_max,0," << rec.multipliers.mu_max << '\n';
}

void write_solution(const RunRecord& rec, const std::filesystem::path& p) {
  auto os = open_out(p);
  const std::size_t dim = rec.grid.points.empty() ? 0 : rec.grid.points[0].size();
  const std::size_t n_out =
      rec.predictions.empty() ? (rec.grid.exact.empty() ? 0 : rec.grid.exact[0].size())
                              : rec.predictions[0].size();
  for (std::size_t j = 0; j < dim; ++j) os << (j ? "," : "") << "x" << j;
  for (std::size_t k = 0; k < n_out; ++k) os << ",pred" << k;
  for (std::size_t k = 0; k < (rec.grid.exact.empty() ? 0 : rec.grid.exact[0].size()); ++k)
    os << ",exact" << k;
  os << '\n';
  for (std::size_t i = 0; i < rec.grid.points.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) os << (j ? "," : "") << rec.grid.points[i][j];
    if (i < rec.predictions.size())
      for (double v : rec.predictions[i]) os << ',' << v;
    for (double v : rec.grid.exact[i]) os << ',' << v;
    os << '\n';
  }
}

json network_json(const NetworkConfig& net) {
  return json{{"input_dim", net.input_dim},
              {"output_dim", net.output_dim},
              {"hidden_layers", net.hidden_layers},
              {"hidden_width", net.hidden_width},
              {"activation", to_string(net.activation)}};
}

}  // namespace

void save_run(const RunRecord& record, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());

  json manifest{{"problem", record.problem},
                {"seed", record.seed},
                {"epochs", record.epochs},
                {"epochs_completed", record.history.size()},
                {"mu_max", record.mu_max},
                {"huber_delta", record.huber_delta},
                {"network", network_json(record.net)},
                {"start_time", record.start_time},
                {"end_time", record.end_time},
                {"failed", record.failed}};
  if (record.failed) manifest["failure"] = record.failure;
  if (!record.history.empty()) {
    const EpochRow& last = record.final_row();
    json metrics{{"rel_l2_u", last.rel_l2_u},
                 {"linf_u", last.linf_u},
                 {"mae_u", last.mae_u},
                 {"mse_u", last.mse_u},
                 {"loss_total", last.loss_total}};
    if (!std::isnan(last.rel_l2_sigma)) metrics["rel_l2_sigma"] = last.rel_l2_sigma;
    manifest["metrics"] = metrics;
  }
  open_out(root / "manifest.json") << manifest.dump(2) << '\n';

  json checkpoint{{"network", network_json(record.net)}, {"theta", record.theta}};
  open_out(root / "checkpoint.json") << checkpoint.dump(2) << '\n';

  write_history(record, root / "history.csv");
  write_multipliers(record, root / "multipliers.csv");
  write_solution(record, root / "solution.csv");
}

std::pair<NetworkConfig, ParamVector> load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path + ": " + e.what());
  }
  const json& n = j.at("network");
  NetworkConfig net;
  net.input_dim = n.at("input_dim").get<int>();
  net.output_dim = n.at("output_dim").get<int>();
  net.hidden_layers = n.at("hidden_layers").get<int>();
  net.hidden_width = n.at("hidden_width").get<int>();
  net.activation = activation_from_string(n.at("activation").get<std::string>());
  net.validate();
  ParamVector theta = j.at("theta").get<ParamVector>();
  if (static_cast<int>(theta.size()) != net.param_count())
    throw std::runtime_error("checkpoint " + path + " has " + std::to_string(theta.size()) +
                             " parameters but the config implies " +
                             std::to_string(net.param_count()));
  return {net, std::move(theta)};
}

}  // namespace pdelearn
