#include "proxkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "proxkit/checkpoint.hpp"
#include "proxkit/rng.hpp"

namespace proxkit {

namespace {

QuantizationGrid grid_from_name(const std::string& name) {
  if (name == "binary") return binary_grid();
  if (name == "ternary") return ternary_grid();
  if (name == "quaternary") return quaternary_grid();
  // otherwise a comma list of levels
  std::vector<double> levels;
  std::stringstream ss(name);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      levels.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("config: bad grid '" + name + "'");
    }
  }
  return make_grid(levels);
}

Dataset build_dataset(const KeyValueConfig& cfg) {
  std::string kind = cfg.get_string("dataset.kind", "blobs");
  if (kind == "blobs") {
    BlobSpec spec;
    spec.seed = static_cast<std::uint64_t>(cfg.get_long("dataset.seed", 0));
    spec.n_samples = static_cast<std::size_t>(cfg.get_long("dataset.samples", 200));
    spec.n_features = static_cast<std::size_t>(cfg.get_long("dataset.features", 2));
    spec.n_classes = static_cast<std::size_t>(cfg.get_long("dataset.classes", 2));
    spec.separation = cfg.get_double("dataset.separation", 3.0);
    return gen_blobs(spec);
  }
  if (kind == "csv")
    return load_csv(cfg.get_string("dataset.path"), cfg.get_bool("dataset.header", false));
  throw ConfigError("config: unknown dataset.kind '" + kind + "'");
}

}  // namespace

Problem build_problem(const KeyValueConfig& cfg) {
  std::string kind = cfg.get_string("problem.kind", "quadratic");
  if (kind == "quadratic") {
    std::size_t dim = static_cast<std::size_t>(cfg.get_long("quadratic.dim", 1));
    Mat h = Mat::identity(dim);
    if (cfg.has("quadratic.h")) {
      std::vector<double> vals = cfg.get_doubles("quadratic.h");
      if (vals.size() != dim * dim) throw ConfigError("config: quadratic.h needs dim*dim entries");
      h.a = vals;
    }
    std::vector<double> b(dim, 0.0);
    if (cfg.has("quadratic.b")) {
      b = cfg.get_doubles("quadratic.b");
      if (b.size() != dim) throw ConfigError("config: quadratic.b needs dim entries");
    }
    return Problem::quadratic(std::move(h), std::move(b));
  }
  if (kind == "least_squares") {
    std::size_t rows = static_cast<std::size_t>(cfg.get_long("least_squares.rows", 20));
    std::size_t cols = static_cast<std::size_t>(cfg.get_long("least_squares.cols", 4));
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("least_squares.seed", 0));
    RngStream rs(seed, "least_squares");
    Mat a(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) a.a[i] = rs.normal(i);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) y[i] = rs.normal(rows * cols + i);
    return Problem::least_squares(std::move(a), std::move(y));
  }
  if (kind == "logistic") {
    Dataset ds = build_dataset(cfg);
    return Problem::logistic(std::move(ds), cfg.get_double("logistic.l2", 0.0));
  }
  if (kind == "mlp") {
    Dataset ds = build_dataset(cfg);
    std::vector<std::size_t> sizes{ds.d};
    if (cfg.has("mlp.hidden"))
      for (double h : cfg.get_doubles("mlp.hidden")) sizes.push_back(static_cast<std::size_t>(h));
    else
      sizes.push_back(8);
    sizes.push_back(ds.classes);
    Activation act = Activation::Tanh;
    std::string a = cfg.get_string("mlp.activation", "tanh");
    if (a == "relu")
      act = Activation::Relu;
    else if (a != "tanh")
      throw ConfigError("config: unknown mlp.activation '" + a + "'");
    return Problem::mlp(std::move(sizes), act, std::move(ds));
  }
  throw ConfigError("config: unknown problem.kind '" + kind + "'");
}

QuantizerSpec build_quantizer_spec_base(const KeyValueConfig& cfg) {
  std::string kind = cfg.get_string("quantizer.kind", "identity");
  if (kind == "identity") return QuantizerSpec::identity();
  if (kind == "projector")
    return QuantizerSpec::projector(grid_from_name(cfg.get_string("quantizer.grid", "binary")));
  if (kind == "piecewise_linear") {
    double rho = cfg.get_double("quantizer.rho", 0.05);
    double varrho = cfg.get_double("quantizer.varrho", rho);
    return QuantizerSpec::piecewise_linear(
        grid_from_name(cfg.get_string("quantizer.grid", "binary")), rho, varrho,
        cfg.get_bool("quantizer.clip", true));
  }
  if (kind == "binary_relax")
    return QuantizerSpec::binary_relax(grid_from_name(cfg.get_string("quantizer.grid", "binary")),
                                       cfg.get_double("quantizer.mu", 1.0));
  if (kind == "soft_sign")
    return QuantizerSpec::soft_sign(cfg.get_double("quantizer.epsilon", 0.5),
                                    cfg.get_double("quantizer.mu", 1.0));
  throw ConfigError("config: unknown quantizer.kind '" + kind + "'");
}

QuantizerSpec build_quantizer_spec(const KeyValueConfig& cfg, const Problem& problem) {
  QuantizerSpec base = build_quantizer_spec_base(cfg);
  bool quantize_biases = cfg.get_bool("quantizer.quantize_biases", false);
  if (problem.kind() == Problem::Kind::Mlp && !quantize_biases &&
      base.kind != QuantizerSpec::Kind::Identity) {
    WeightGroups probe = problem.initial_weights(0);
    std::vector<std::pair<std::string, QuantizerSpec>> members;
    for (const auto& name : probe.names) {
      bool is_bias = name.size() >= 5 && name.substr(name.size() - 5) == ".bias";
      members.emplace_back(name, is_bias ? QuantizerSpec::identity() : base);
    }
    return QuantizerSpec::per_group(std::move(members));
  }
  return base;
}

StepSchedule build_schedule(const KeyValueConfig& cfg) {
  std::string kind = cfg.get_string("schedule.kind", "constant");
  StepSchedule s;
  if (kind == "constant")
    s = StepSchedule::constant_eta(cfg.get_double("schedule.eta0", 0.1));
  else if (kind == "polynomial")
    s = StepSchedule::polynomial_eta(cfg.get_double("schedule.eta0", 0.1),
                                     cfg.get_double("schedule.p", 0.5));
  else if (kind == "gcg_inv_t")
    s = StepSchedule::gcg_lambda_inv_t();
  else if (kind == "gcg_two_over")
    s = StepSchedule::gcg_lambda_two_over();
  else if (kind == "explicit")
    s = StepSchedule::explicit_etas_of(cfg.get_doubles("schedule.etas"));
  else
    throw ConfigError("config: unknown schedule.kind '" + kind + "'");
  s.rho0 = cfg.get_double("schedule.rho0", 0.0);
  s.B = cfg.get_double("sharpness.B", cfg.get_double("schedule.B", 100.0));
  return s;
}

RunConfig build_run_config(const KeyValueConfig& cfg) {
  RunConfig rc;
  rc.steps = cfg.get_long("run.steps", 100);
  if (rc.steps < 0) throw ConfigError("config: run.steps must be nonnegative");
  rc.seed = static_cast<std::uint64_t>(cfg.get_long("run.seed", 0));
  rc.batch_size = static_cast<std::size_t>(cfg.get_long("run.batch", 0));
  rc.divergence_bound = cfg.get_double("run.divergence_bound", 1e6);
  rc.hard_quantize_step = cfg.get_long("run.hard_step", -1);
  std::string mode = cfg.get_string("sharpness.mode", "pi");
  if (mode == "pi")
    rc.sharpness_mode = SharpnessMode::PiInverse;
  else if (mode == "linear")
    rc.sharpness_mode = SharpnessMode::LinearRho;
  else
    throw ConfigError("config: unknown sharpness.mode '" + mode + "'");
  rc.linear_B = cfg.get_double("sharpness.B", 100.0);
  return rc;
}

std::string format_csv_row(long t, double eta, double lambda, double pi, double sharpness,
                           double loss_cont, double loss_quant, double grad_norm, double acc) {
  std::ostringstream out;
  out << t << ',' << format_g17(eta) << ',' << format_g17(lambda) << ',' << format_g17(pi) << ','
      << format_g17(sharpness) << ',' << format_g17(loss_cont) << ',' << format_g17(loss_quant)
      << ',' << format_g17(grad_norm) << ',' << format_g17(acc);
  return out.str();
}

RunOutcome cmd_run(const KeyValueConfig& cfg, const std::string& out_dir,
                   const std::string& resume_path) {
  namespace fs = std::filesystem;
  RunOutcome outcome;
  Problem problem = build_problem(cfg);
  QuantizerSpec spec = build_quantizer_spec(cfg, problem);
  Quantizer quantizer = Quantizer::from_spec(spec);
  StepSchedule schedule = build_schedule(cfg);
  RunConfig rc = build_run_config(cfg);

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "metrics.csv");
  if (!csv) throw std::runtime_error("cmd_run: cannot write metrics.csv under " + out_dir);
  csv << kMetricsHeader << "\n";

  TrainState state = make_state(problem, optimizer_kind_from(cfg.get_string("optimizer.kind", "pc")),
                                quantizer, rc);
  long start_t = 0;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (ckpt.seed != rc.seed)
      throw ConfigError("cmd_run: checkpoint seed does not match run.seed");
    state.w_star = ckpt.w_star;
    state.w_quant = ckpt.w_quant;
    state.sched = ckpt.sched;
    start_t = ckpt.step;
  }

  long hard_at = rc.hard_quantize_step >= 0 ? rc.hard_quantize_step : rc.steps;
  std::vector<bool> frozen(state.w_star.group_count(), false);
  bool hard_done = false;
  if (start_t >= hard_at && hard_at < rc.steps) {
    hard_done = true;
    for (std::size_t g = 0; g < state.w_star.group_count(); ++g)
      frozen[g] = quantizer.hard_grid(state.w_star.names[g]).has_value();
  }

  auto write_row = [&](long t, double eta, double lambda, double pi, double sharp,
                       const WeightGroups& w_star_t, const WeightGroups& w_quant_t,
                       double grad_norm) {
    csv << format_csv_row(t, eta, lambda, pi, sharp, problem.loss(w_star_t),
                          problem.loss(w_quant_t), grad_norm, problem.accuracy(w_quant_t))
        << "\n";
  };

  if (start_t == 0) write_row(0, 0.0, 0.0, 1.0, 1.0, state.w_star, state.w_quant, 0.0);

  outcome.steps_completed = start_t;
  for (long t = start_t + 1; t <= rc.steps; ++t) {
    WeightGroups w_star_t = state.w_star;
    TrainState next;
    try {
      next = step(state, schedule, problem, quantizer);
    } catch (const DivergenceError& e) {
      csv.flush();
      outcome.exit_code = 2;
      outcome.message = e.what();
      return outcome;
    }
    if (hard_done) {
      for (std::size_t g = 0; g < next.w_star.group_count(); ++g)
        if (frozen[g]) {
          next.w_star.values[g] = state.w_star.values[g];
          next.w_quant.values[g] = state.w_star.values[g];
        }
    }
    write_row(t, next.sched.eta_t, next.sched.lambda_t, next.sched.pi_t, next.last_sharpness,
              w_star_t, next.w_quant, l2_norm(next.last_grad));
    state = next;
    outcome.steps_completed = t;
    if (!hard_done && t == hard_at && t < rc.steps) {
      for (std::size_t g = 0; g < state.w_star.group_count(); ++g) {
        auto grid = quantizer.hard_grid(state.w_star.names[g]);
        if (!grid) continue;
        frozen[g] = true;
        for (double& x : state.w_star.values[g]) x = project(*grid, x);
      }
      hard_done = true;
    }
  }

  // terminal hard quantization
  WeightGroups terminal = state.w_star;
  for (std::size_t g = 0; g < terminal.group_count(); ++g) {
    auto grid = quantizer.hard_grid(terminal.names[g]);
    if (!grid) continue;
    for (double& x : terminal.values[g]) x = project(*grid, x);
  }
  outcome.final_accuracy = problem.accuracy(terminal);
  outcome.final_loss_quantized = problem.loss(terminal);

  Checkpoint ckpt;
  ckpt.step = rc.steps;
  ckpt.seed = rc.seed;
  ckpt.draw_counter = static_cast<std::uint64_t>(state.sched.t);
  ckpt.sched = state.sched;
  ckpt.w_star = state.w_star;
  // quantized image of the stored continuous weights at the last sharpness
  ckpt.w_quant = quantizer(state.w_star, state.last_sharpness,
                           static_cast<std::uint64_t>(state.sched.t));
  save_checkpoint(ckpt, (fs::path(out_dir) / "checkpoint.txt").string());

  std::ofstream final_out(fs::path(out_dir) / "final.txt");
  final_out << "accuracy " << format_g17(outcome.final_accuracy) << "\n"
            << "loss_quantized " << format_g17(outcome.final_loss_quantized) << "\n";
  return outcome;
}

std::vector<SweepRow> cmd_sweep(const KeyValueConfig& cfg, const std::string& out_dir, int jobs) {
  std::vector<std::string> kinds =
      cfg.has("sweep.kinds") ? cfg.get_strings("sweep.kinds")
                             : std::vector<std::string>{cfg.get_string("optimizer.kind", "pc")};
  std::vector<std::string> grids =
      cfg.has("sweep.grids") ? cfg.get_strings("sweep.grids")
                             : std::vector<std::string>{cfg.get_string("quantizer.grid", "binary")};
  std::vector<double> rho0s = cfg.has("sweep.rho0") ? cfg.get_doubles("sweep.rho0")
                                                    : std::vector<double>{cfg.get_double("quantizer.rho", 0.05)};
  std::vector<double> seeds = cfg.has("sweep.seeds") ? cfg.get_doubles("sweep.seeds")
                                                     : std::vector<double>{0};
  if (kinds.empty() || grids.empty() || rho0s.empty() || seeds.empty())
    throw ConfigError("sweep: empty parameter grid");

  struct Cell {
    std::string kind, grid;
    double rho0;
  };
  std::vector<Cell> cells;
  for (const auto& k : kinds)
    for (const auto& g : grids)
      for (double r : rho0s) cells.push_back({k, g, r});

  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& cell = cells[i];
      std::vector<double> accs;
      for (double sd : seeds) {
        KeyValueConfig sub = cfg;
        sub.set("optimizer.kind", cell.kind);
        sub.set("quantizer.grid", cell.grid);
        sub.set("quantizer.rho", format_g17(cell.rho0));
        sub.set("quantizer.varrho", format_g17(cell.rho0));
        sub.set("run.seed", std::to_string(static_cast<long>(sd)));
        sub.set("dataset.seed", std::to_string(static_cast<long>(sd)));
        std::string cell_dir = out_dir + "/cell_" + cell.kind + "_" + cell.grid + "_r" +
                               std::to_string(i) + "_s" + std::to_string(static_cast<long>(sd));
        RunOutcome r = cmd_run(sub, cell_dir);
        if (r.exit_code == 0) accs.push_back(r.final_accuracy);
      }
      SweepRow row;
      row.kind = cell.kind;
      row.grid = cell.grid;
      row.rho0 = cell.rho0;
      row.seeds = static_cast<int>(accs.size());
      if (!accs.empty()) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size());
        row.acc_mean = mean;
        row.acc_std = std::sqrt(var);
      }
      rows[i] = row;
    }
  };

  int nworkers = std::max(1, jobs);
  std::vector<std::thread> threads;
  for (int i = 0; i < nworkers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::filesystem::create_directories(out_dir);
  std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
  summary << "kind,grid,rho0,seeds,acc_mean,acc_std\n";
  for (const auto& r : rows)
    summary << r.kind << ',' << r.grid << ',' << format_g17(r.rho0) << ',' << r.seeds << ','
            << format_g17(r.acc_mean) << ',' << format_g17(r.acc_std) << "\n";
  return rows;
}

void cmd_quantize(const std::string& ckpt_in, const std::string& ckpt_out,
                  const QuantizerSpec& spec, double sharpness, bool hard) {
  Checkpoint ckpt = load_checkpoint(ckpt_in);
  Quantizer q = Quantizer::from_spec(spec);
  if (hard) {
    ckpt.w_quant = ckpt.w_star;
    for (std::size_t g = 0; g < ckpt.w_quant.group_count(); ++g) {
      auto grid = q.hard_grid(ckpt.w_quant.names[g]);
      if (!grid) continue;
      for (double& x : ckpt.w_quant.values[g]) x = project(*grid, x);
    }
  } else {
    ckpt.w_quant = q(ckpt.w_star, sharpness, ckpt.draw_counter);
  }
  save_checkpoint(ckpt, ckpt_out);
}

}  // namespace proxkit
