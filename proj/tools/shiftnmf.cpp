// shiftnmf: translation-invariant NMF from the command line.
//
//   shiftnmf synth       --experiment 1|2 --out DIR
//   shiftnmf decompose   --input A.csv|DIR --frame RxS --k K --out DIR
//   shiftnmf eval        --archive DIR --truth truth.json
//   shiftnmf xcorr-bench

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "shiftnmf/correlation.hpp"
#include "shiftnmf/io.hpp"
#include "shiftnmf/solvers.hpp"
#include "shiftnmf/synth.hpp"

namespace fs = std::filesystem;
using namespace shiftnmf;
using io::json;

namespace {

struct FrameShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

FrameShape parse_frame(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw std::invalid_argument("--frame expects RxS, got '" + text + "'");
  try {
    const long long r = std::stoll(text.substr(0, x));
    const long long s = std::stoll(text.substr(x + 1));
    if (r <= 0 || s <= 0) throw std::invalid_argument("");
    return {static_cast<std::size_t>(r), static_cast<std::size_t>(s)};
  } catch (const std::exception&) {
    throw std::invalid_argument("--frame expects positive RxS, got '" + text + "'");
  }
}

struct SynthArgs {
  int experiment = 1;
  std::uint64_t seed = 0;
  std::size_t images = 0;  // 0 keeps the experiment's default
  std::string frame;
  double noise = -1.0;  // < 0 keeps the experiment's default
  bool toroidal = false;
  bool pgm_binary = false;
  std::string out;
};

struct DecomposeArgs {
  std::string input;
  std::string frame;
  std::size_t k = 2;
  std::size_t big_k = 0;
  bool two_stage = false;
  double discard_thresh = kDefaultDiscardThreshold;
  std::size_t iters = 10;
  std::size_t max_outer = 100;
  double tol_err = 1e-3;
  double tol_grad = 1e-3;
  double rel_tol = 1e-4;
  std::uint64_t seed = 0;
  bool randomize_order = false;
  bool serial = false;
  bool pgm_binary = false;
  std::string out;
};

struct EvalArgs {
  std::string archive;
  std::string truth;
  std::string out;
  double threshold = 0.9;
};

struct BenchArgs {
  std::vector<std::size_t> sizes{16, 64, 100, 256, 400, 900, 1024, 1600, 2500, 4096};
  std::size_t reps = 0;  // 0 picks a count per size
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& args) {
  DatasetSpec spec = experiment_spec(args.experiment, args.seed);
  if (args.images) spec.images = args.images;
  if (!args.frame.empty()) {
    const auto f = parse_frame(args.frame);
    spec.rows = f.rows;
    spec.cols = f.cols;
  }
  if (args.noise >= 0.0) spec.noise_mean = args.noise;
  if (args.toroidal) spec.placement = PlacementMode::toroidal;

  const Dataset ds = make_dataset(spec);
  const fs::path out(args.out);
  fs::create_directories(out);
  io::write_matrix_csv(out / "A.csv", ds.A);
  for (std::size_t i = 0; i < ds.A.cols(); ++i) {
    io::write_pgm(out / ("img_" + std::to_string(i) + ".pgm"), devectorize(ds.A.col(i), ds.rows, ds.cols),
                  args.pgm_binary);
  }
  io::save_truth(out / "truth.json", ds);
  std::cout << "wrote " << ds.A.cols() << " images of " << ds.rows << "x" << ds.cols << " to " << out.string()
            << "\n";
  return 0;
}

int run_decompose(const DecomposeArgs& args) {
  DenseMatrix a;
  FrameShape frame;
  const fs::path input(args.input);
  if (fs::is_directory(input)) {
    io::ImageStack stack = io::read_image_directory(input);
    a = std::move(stack.A);
    frame = {stack.rows, stack.cols};
    if (!args.frame.empty()) {
      const auto given = parse_frame(args.frame);
      if (given.rows != frame.rows || given.cols != frame.cols) {
        throw std::invalid_argument("--frame " + args.frame + " does not match the images in " + args.input);
      }
    }
  } else {
    if (!fs::exists(input)) throw std::invalid_argument("input " + args.input + " does not exist");
    if (args.frame.empty()) throw std::invalid_argument("--frame RxS is required for matrix input");
    a = io::read_matrix_csv(input);
    frame = parse_frame(args.frame);
  }
  if (frame.rows * frame.cols != a.rows()) {
    throw std::invalid_argument("frame " + std::to_string(frame.rows) + "x" + std::to_string(frame.cols) +
                                " has " + std::to_string(frame.rows * frame.cols) + " pixels but the matrix has " +
                                std::to_string(a.rows()) + " rows");
  }

  SolveOptions opts;
  opts.k = args.k;
  opts.inner_iter = args.iters;
  opts.outer_max = args.max_outer;
  opts.tol_err = args.tol_err;
  opts.tol_grad = args.tol_grad;
  opts.rel_improve_tol = args.rel_tol;
  opts.seed = args.seed;
  opts.randomize_order = args.randomize_order;
  opts.exec = args.serial ? Exec::serial : Exec::parallel;
  opts.validate();

  io::FactorArchive archive;
  archive.frame_rows = frame.rows;
  archive.frame_cols = frame.cols;
  archive.config = {{"command", "decompose"},
                    {"input", fs::absolute(input).lexically_normal().string()},
                    {"frame", {{"rows", frame.rows}, {"cols", frame.cols}}},
                    {"k", args.k},
                    {"two_stage", args.two_stage},
                    {"inner_iter", args.iters},
                    {"outer_max", args.max_outer},
                    {"tol_err", args.tol_err},
                    {"tol_grad", args.tol_grad},
                    {"rel_improve_tol", args.rel_tol},
                    {"seed", args.seed},
                    {"randomize_order", args.randomize_order}};

  const fs::path out(args.out);
  if (args.two_stage) {
    const std::size_t big_k = args.big_k ? args.big_k : 2 * args.k;
    archive.config["K"] = big_k;
    archive.config["discard_thresh"] = args.discard_thresh;
    TwoStageResult r = two_stage(a, big_k, args.k, args.discard_thresh, opts);
    archive.kind = "two_stage";
    archive.W = std::move(r.W);
    archive.H = std::move(r.H);
    archive.history = io::history_rows(r.stage1, 1);
    for (const auto& row : io::history_rows(r.stage2, 2)) archive.history.push_back(row);
    archive.iterations_used = r.stage1.iterations_used + r.stage2.iterations_used;
    archive.stop_reason = std::string(to_string(r.stage2.stop_reason));
    archive.config["kept_components"] = r.kept;

    io::FactorArchive stage1;
    stage1.frame_rows = frame.rows;
    stage1.frame_cols = frame.cols;
    stage1.W = r.stage1_W;
    stage1.H = to_gen(r.stage1_H);
    stage1.history = io::history_rows(r.stage1, 1);
    stage1.final_objective = objective(a, stage1.W, stage1.H, opts.exec);
    stage1.iterations_used = r.stage1.iterations_used;
    stage1.stop_reason = std::string(to_string(r.stage1.stop_reason));
    stage1.config = archive.config;
    io::save_archive(out / "stage1", stage1, args.pgm_binary);
  } else {
    Factorization f = als_solve(a, opts);
    auto [w, h] = normalize_columns(std::move(f.W), std::move(f.H));
    archive.W = std::move(w);
    archive.H = to_gen(h);
    archive.history = io::history_rows(f.report, 1);
    archive.iterations_used = f.report.iterations_used;
    archive.stop_reason = std::string(to_string(f.report.stop_reason));
  }
  archive.final_objective = objective(a, archive.W, archive.H, opts.exec);
  io::save_archive(out, archive, args.pgm_binary);

  std::cout << "objective " << archive.final_objective << " after " << archive.iterations_used << " iterations ("
            << archive.stop_reason << "); archive in " << out.string() << "\n";
  return 0;
}

int run_eval(const EvalArgs& args) {
  const io::FactorArchive archive = io::load_archive(args.archive);
  const Dataset truth = io::load_truth(args.truth);
  if (archive.frame_rows != truth.rows || archive.frame_cols != truth.cols) {
    throw std::invalid_argument("frame mismatch: archive is " + std::to_string(archive.frame_rows) + "x" +
                                std::to_string(archive.frame_cols) + ", truth is " + std::to_string(truth.rows) + "x" +
                                std::to_string(truth.cols));
  }
  const auto matches = assign_components(archive.W, truth.truth_vectors());

  json scores = json::array();
  bool all_matched = matches.size() == truth.components.size();
  for (const auto& m : matches) {
    scores.push_back({{"truth", m.truth},
                      {"truth_name", truth.components[m.truth].name},
                      {"component", m.found},
                      {"score", m.score}});
    all_matched = all_matched && m.score > args.threshold;
  }
  const json report = {{"scores", scores},
                       {"threshold", args.threshold},
                       {"all_matched", all_matched},
                       {"final_objective", archive.final_objective},
                       {"iterations_used", archive.iterations_used},
                       {"stop_reason", archive.stop_reason}};
  const fs::path out = args.out.empty() ? fs::path(args.archive) / "eval.json" : fs::path(args.out);
  {
    std::ofstream f(out);
    if (!f) throw io::IoError("cannot write " + out.string());
    f << report.dump(2) << '\n';
  }
  for (const auto& m : matches) {
    std::cout << truth.components[m.truth].name << " <- component " << m.found << "  score " << m.score << "\n";
  }
  std::cout << (all_matched ? "all components matched" : "some components unmatched") << "; report in "
            << out.string() << "\n";
  return 0;
}

int run_xcorr_bench(const BenchArgs& args) {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(args.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::printf("%8s %14s %14s %10s %12s\n", "n", "fft_us", "naive_us", "speedup", "max_abs_diff");
  for (const std::size_t n : args.sizes) {
    if (n == 0) continue;
    Vector v(n), w(n);
    for (auto& x : v) x = unit(rng);
    for (auto& x : w) x = unit(rng);
    const std::size_t reps = args.reps ? args.reps : std::max<std::size_t>(3, 2'000'000 / (n * n + 1));
    const CorrelationPlan& plan = plan_for(n);

    double sink = 0.0;
    auto t0 = clock::now();
    CorrProfile fft;
    for (std::size_t r = 0; r < reps; ++r) {
      fft = plan.correlate(v, w);
      sink += fft[0];
    }
    const double fft_us = std::chrono::duration<double, std::micro>(clock::now() - t0).count() / reps;
    t0 = clock::now();
    CorrProfile naive;
    for (std::size_t r = 0; r < reps; ++r) {
      naive = circ_xcorr_naive(v, w);
      sink += naive[0];
    }
    const double naive_us = std::chrono::duration<double, std::micro>(clock::now() - t0).count() / reps;
    double diff = 0.0;
    for (std::size_t p = 0; p < n; ++p) diff = std::max(diff, std::abs(fft[p] - naive[p]));
    std::printf("%8zu %14.2f %14.2f %10.1f %12.3e\n", n, fft_us, naive_us, naive_us / fft_us, diff);
    if (sink == -1.0) std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Translation-invariant nonnegative matrix factorization"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic shifted-shapes dataset");
  synth_cmd->add_option("--experiment", synth.experiment, "Experiment preset (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--images", synth.images, "Number of images (default: preset)")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frame", synth.frame, "Frame shape RxS (default: preset)");
  synth_cmd->add_option("--noise", synth.noise, "Mean of the uniform noise (default: preset)")
      ->check(CLI::Range(0.0, 0.5));
  synth_cmd->add_flag("--toroidal", synth.toroidal, "Allow shapes to wrap around the frame");
  synth_cmd->add_flag("--pgm-binary", synth.pgm_binary, "Write P5 instead of P2 images");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  DecomposeArgs dec;
  auto* dec_cmd = app.add_subcommand("decompose", "Factor an image stack");
  dec_cmd->add_option("--input", dec.input, "A.csv matrix or directory of .pgm images")->required();
  dec_cmd->add_option("--frame", dec.frame, "Frame shape RxS (n = R*S)");
  dec_cmd->add_option("--k", dec.k, "Number of components")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--K", dec.big_k, "Stage-1 components for --two-stage (default 2k)");
  dec_cmd->add_flag("--two-stage", dec.two_stage, "Factor with K components, then refactor with k");
  dec_cmd->add_option("--discard-thresh", dec.discard_thresh, "Stage-1 discard threshold (fraction of max coeff)")
      ->check(CLI::Range(0.0, 1.0));
  dec_cmd->add_option("--iters", dec.iters, "Inner iterations for H sweeps and W gradient steps")
      ->check(CLI::PositiveNumber);
  dec_cmd->add_option("--max-outer", dec.max_outer, "Maximum outer ALS iterations")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--tol-err", dec.tol_err, "Gradient-loop stop: residual norm")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--tol-grad", dec.tol_grad, "Gradient-loop stop: gradient norm")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--rel-tol", dec.rel_tol, "Outer stop: relative objective change")
      ->check(CLI::PositiveNumber);
  dec_cmd->add_option("--seed", dec.seed, "RNG seed");
  dec_cmd->add_flag("--randomize-order", dec.randomize_order, "Shuffle component order in each H sweep");
  dec_cmd->add_flag("--serial", dec.serial, "Disable OpenMP parallelism");
  dec_cmd->add_flag("--pgm-binary", dec.pgm_binary, "Write P5 instead of P2 component images");
  dec_cmd->add_option("--out", dec.out, "Archive directory")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score an archive against ground truth");
  eval_cmd->add_option("--archive", ev.archive, "Archive directory written by decompose")->required();
  eval_cmd->add_option("--truth", ev.truth, "truth.json written by synth")->required();
  eval_cmd->add_option("--out", ev.out, "Report path (default ARCHIVE/eval.json)");
  eval_cmd->add_option("--threshold", ev.threshold, "Score counted as a match");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("xcorr-bench", "Time FFT against naive circular correlation");
  bench_cmd->add_option("--sizes", bench.sizes, "Vector lengths");
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per size (default: automatic)");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*dec_cmd) {
      if (dec.two_stage && dec.big_k && dec.big_k < dec.k) throw std::invalid_argument("--K must be at least --k");
      return run_decompose(dec);
    }
    if (*eval_cmd) return run_eval(ev);
    if (*bench_cmd) return run_xcorr_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "shiftnmf: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
