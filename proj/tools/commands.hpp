#pragma once

// The paracut command line. Each subcommand is a plain function over an
// options struct so the tests can drive it without a process boundary;
// run() adds flag parsing on top.

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "paracut/certify.hpp"
#include "paracut/decompose.hpp"
#include "paracut/io.hpp"
#include "paracut/oracle.hpp"
#include "paracut/random.hpp"
#include "paracut/solvers.hpp"

namespace paracut::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;  // verify found a violation
inline constexpr int usage = 2;
inline constexpr int io = 3;
inline constexpr int not_certified = 4;
}  // namespace exit_code

/// Raised for bad flag values or flag combinations; maps to exit code 2.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --threads if given, else PARACUT_THREADS, else every hardware thread.
inline int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PARACUT_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw usage_error(std::string("bad PARACUT_THREADS value '") + env + "'");
    return static_cast<int>(v);
  }
  return parallel::hardware_threads();
}

// ---------------------------------------------------------------------------
// Instance loading

struct LoadedInstance {
  std::optional<GridEnergy> grid;
  std::optional<CutInstance> general;  // DIMACS input keeps its s-t constant
  CutGraph graph() const { return grid ? grid->graph() : general->graph(); }
};

struct InstanceOptions {
  std::string input;
  std::string format = "auto";  // auto | grid | dimacs
  std::string grid_dims;        // e.g. 64x64; overrides a DIMACS grid hint
  std::string connectivity;
};

inline std::string detect_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  char magic[5] = {};
  in.read(magic, 5);
  return std::string_view(magic, static_cast<std::size_t>(in.gcount())) == kGridMagic ? "grid" : "dimacs";
}

/// Loads the input. A grid is required unless `allow_general` is set.
inline LoadedInstance load_instance(const InstanceOptions& opt, bool allow_general) {
  if (opt.input.empty()) throw usage_error("--input is required");
  std::string format = opt.format;
  if (format != "auto" && format != "grid" && format != "dimacs") {
    throw usage_error("--format must be grid or dimacs");
  }
  if (format == "auto") format = detect_format(opt.input);
  LoadedInstance out;
  if (format == "grid") {
    out.grid = read_grid(opt.input);
    return out;
  }
  out.general = read_dimacs(opt.input);
  std::optional<GridShape> shape = out.general->grid;
  if (!opt.grid_dims.empty() || !opt.connectivity.empty()) {
    if (opt.grid_dims.empty() || opt.connectivity.empty()) {
      throw usage_error("--grid-dims and --connectivity go together");
    }
    try {
      shape = GridShape(paracut::detail::parse_dims(opt.grid_dims), parse_connectivity(opt.connectivity));
    } catch (const invalid_input& e) {
      throw usage_error(e.what());
    }
  }
  if (shape) {
    try {
      out.grid = out.general->to_grid(*shape);
    } catch (const invalid_input& e) {
      throw usage_error(std::string("instance does not fit the grid layout: ") + e.what());
    }
  } else if (!allow_general) {
    throw usage_error("'" + opt.input +
                      "' is not a grid instance; the convex solvers need a grid layout (pass --grid-dims and "
                      "--connectivity) or use --algo maxflow");
  }
  return out;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOptions {
  InstanceOptions instance;
  std::string algo = "aar";
  double gap_tol = 0.0;
  int max_iters = 1000;
  int threads = 0;  // 0: environment default
  int check_every = 10;
  std::string warm_start;
  std::string save_dual;
  bool force = false;
  std::string out;
  std::string trace;
  double scale_pairwise = 1.0;
};

inline int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const bool maxflow = opt.algo == "maxflow";
    std::optional<Algorithm> algo;
    if (!maxflow) {
      try {
        algo = parse_algorithm(opt.algo);
      } catch (const invalid_input&) {
        throw usage_error("--algo must be aar, ap, bcd, fista or maxflow");
      }
    }
    if (!(opt.scale_pairwise >= 0.0) || !std::isfinite(opt.scale_pairwise)) {
      throw usage_error("--scale-pairwise must be a nonnegative number");
    }
    if (opt.max_iters < 1 || opt.check_every < 1 || !(opt.gap_tol >= 0.0)) {
      throw usage_error("--max-iters and --check-every must be positive, --gap-tol nonnegative");
    }
    if (maxflow && (!opt.warm_start.empty() || !opt.save_dual.empty() || !opt.trace.empty())) {
      throw usage_error("--warm-start, --save-dual and --trace need an iterative algorithm");
    }
    const int threads = resolve_threads(opt.threads);

    auto inst = load_instance(opt.instance, maxflow);
    if (opt.scale_pairwise != 1.0) {
      if (inst.grid) inst.grid = inst.grid->with_scaled_pairwise(opt.scale_pairwise);
      if (inst.general) {
        for (auto& e : inst.general->edges) e.weight *= opt.scale_pairwise;
      }
    }

    Labeling labeling;
    double energy_value = 0.0, gap = 0.0, wall_ms = 0.0;
    int iterations = 0;
    bool certified = true;

    if (maxflow) {
      const auto graph = inst.graph();
      const auto t0 = std::chrono::steady_clock::now();
      auto cut = maxflow_mincut(graph);
      wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      labeling = std::move(cut.labeling);
      energy_value = cut.energy;
    } else {
      const auto& g = *inst.grid;
      auto dec = decompose_grid(g);
      const auto fp = dual_fingerprint(g, dec);
      std::optional<DualState> warm;
      if (!opt.warm_start.empty()) warm = load_dual(opt.warm_start, fp, opt.force);

      SolverConfig cfg;
      cfg.algorithm = *algo;
      cfg.max_iters = opt.max_iters;
      cfg.gap_tol = opt.gap_tol;
      cfg.threads = threads;
      cfg.check_every = opt.check_every;
      cfg.warm_start = warm ? &*warm : nullptr;
      cfg.record_trace = !opt.trace.empty();
      SolveResult r;
      try {
        r = solve(g, dec, cfg);
      } catch (const invalid_input& e) {
        // Only a forced, mismatched warm start can get here.
        throw usage_error(e.what());
      }
      labeling = std::move(r.labeling);
      energy_value = r.energy;
      gap = r.gap;
      iterations = r.iterations;
      certified = r.certified;
      wall_ms = r.wall_ms;
      if (!opt.save_dual.empty()) save_dual(r.dual_state, fp, opt.save_dual);
      if (!opt.trace.empty()) write_trace_csv(r.trace, opt.trace);
    }
    if (!opt.out.empty()) write_labeling(labeling, opt.out);

    out << std::setprecision(17);
    out << "algorithm " << opt.algo << "\n";
    out << "nodes " << labeling.size() << "\n";
    out << "energy " << energy_value << "\n";
    if (inst.general) out << "cut_capacity " << energy_value + inst.general->constant() << "\n";
    out << "gap " << gap << "\n";
    out << "iterations " << iterations << "\n";
    out << "certified " << (certified ? "yes" : "no") << "\n";
    out << std::setprecision(6) << "wall_ms " << wall_ms << "\n";
    if (!certified) {
      err << "not certified: gap " << gap << " > tolerance " << opt.gap_tol << " after " << iterations
          << " iterations\n";
      return exit_code::not_certified;
    }
    return exit_code::ok;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::io;
  } catch (const invalid_input& e) {
    // Content that parsed but does not describe a valid instance.
    err << "error: " << e.what() << "\n";
    return exit_code::io;
  }
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  InstanceOptions instance;  // empty input: generate a random grid
  std::string generate_dims = "64x64";
  std::string generate_connectivity = "2D-4";
  std::uint64_t seed = 1;
  std::vector<std::string> algos{"aar", "ap", "bcd", "fista"};
  std::vector<int> threads{1};
  std::vector<double> scales{1.0, 0.1};
  int max_iters = 5000;
  double gap_tol = 0.0;
};

inline constexpr std::string_view kBenchHeader =
    "algorithm,threads,scale,iterations,certified,wall_ms,energy,optimal_energy,"
    "iter_err10,iter_err2,iter_jd10,iter_jd2";

struct BenchRow {
  std::string algorithm;
  int threads = 1;
  double scale = 1.0;
  int iterations = 0;
  bool certified = false;
  double wall_ms = 0.0;
  double energy = 0.0;
  double optimal_energy = 0.0;
  // First iteration whose energy error falls below 10% / 2% of the error of
  // the unary-only labeling [w > 0], and whose Jaccard distance to the
  // max-flow labeling drops below 0.1 / 0.02; -1 if never.
  int iter_err10 = -1, iter_err2 = -1, iter_jd10 = -1, iter_jd2 = -1;
};

inline std::string format_bench_row(const BenchRow& r) {
  std::ostringstream s;
  s << std::setprecision(10) << r.algorithm << ',' << r.threads << ',' << r.scale << ',' << r.iterations << ','
    << (r.certified ? 1 : 0) << ',' << std::setprecision(6) << r.wall_ms << ',' << std::setprecision(12) << r.energy
    << ',' << r.optimal_energy << ',' << r.iter_err10 << ',' << r.iter_err2 << ',' << r.iter_jd10 << ','
    << r.iter_jd2;
  return s.str();
}

/// Runs every (scale, algorithm, threads) combination on one instance. Gap
/// checks run every iteration so the iteration columns are exact; wall time
/// covers the solver call only.
inline std::vector<BenchRow> run_bench(const GridEnergy& base, const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  for (double scale : opt.scales) {
    const GridEnergy g = scale == 1.0 ? base : base.with_scaled_pairwise(scale);
    const auto dec = decompose_grid(g);
    const auto best = maxflow_mincut(g);
    const double initial_error = energy(g, threshold(g.unary())) - best.energy;
    for (const auto& name : opt.algos) {
      for (int threads : opt.threads) {
        SolverConfig cfg;
        cfg.algorithm = parse_algorithm(name);
        cfg.max_iters = opt.max_iters;
        cfg.gap_tol = opt.gap_tol;
        cfg.threads = threads;
        cfg.check_every = 1;
        cfg.record_trace = true;
        cfg.reference = &best.labeling;
        auto r = solve(g, dec, cfg);
        BenchRow row;
        row.algorithm = name;
        row.threads = threads;
        row.scale = scale;
        row.iterations = r.iterations;
        row.certified = r.certified;
        row.wall_ms = r.wall_ms;
        row.energy = r.energy;
        row.optimal_energy = best.energy;
        for (const auto& e : r.trace) {
          const double err = e.energy - best.energy;
          if (row.iter_err10 < 0 && err <= 0.1 * initial_error) row.iter_err10 = e.iter;
          if (row.iter_err2 < 0 && err <= 0.02 * initial_error) row.iter_err2 = e.iter;
          if (row.iter_jd10 < 0 && e.jaccard < 0.1) row.iter_jd10 = e.iter;
          if (row.iter_jd2 < 0 && e.jaccard < 0.02) row.iter_jd2 = e.iter;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    for (const auto& a : opt.algos) {
      if (a != "aar" && a != "ap" && a != "bcd" && a != "fista") throw usage_error("unknown algorithm '" + a + "'");
    }
    for (int t : opt.threads) {
      if (t < 1) throw usage_error("thread counts must be positive");
    }
    for (double s : opt.scales) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw usage_error("scales must be nonnegative numbers");
    }
    if (opt.max_iters < 1) throw usage_error("--max-iters must be positive");
    GridEnergy g = [&] {
      if (!opt.instance.input.empty()) return *load_instance(opt.instance, false).grid;
      try {
        return random_grid(GridShape(paracut::detail::parse_dims(opt.generate_dims), parse_connectivity(opt.generate_connectivity)),
                           opt.seed);
      } catch (const invalid_input& e) {
        throw usage_error(e.what());
      }
    }();
    auto rows = run_bench(g, opt);
    out << kBenchHeader << "\n";
    for (const auto& r : rows) out << format_bench_row(r) << "\n";
    return exit_code::ok;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::io;
  } catch (const invalid_input& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::io;
  }
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::uint64_t seed = 1;
  int instances = 20;
  bool inject_corruption = false;
  int threads = 0;
};

namespace detail {

// Duplicates the first edge of the first chain into an extra class, so that
// edge is covered twice.
inline ChainDecomposition corrupt(const ChainDecomposition& dec) {
  std::vector<ChainClass> classes(dec.classes().begin(), dec.classes().end());
  if (classes.empty()) return dec;
  auto ch = classes[0].chain(0);
  ChainClass extra;
  extra.add_chain(ch.nodes.subspan(0, 2), ch.weights.subspan(0, 1));
  classes.push_back(extra);
  return ChainDecomposition(dec.node_count(), std::move(classes));
}

}  // namespace detail

/// Oracle cross-checks on seeded random instances small enough for
/// enumeration. The report contains no timings, so equal seeds give equal
/// reports.
inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.instances < 1) throw usage_error("--instances must be positive");
    const int threads = resolve_threads(opt.threads);
    std::mt19937_64 rng(opt.seed);
    int failures = 0;
    for (int k = 0; k < opt.instances; ++k) {
      const auto conn = static_cast<Connectivity>(rng() % 3);
      std::vector<std::size_t> dims;
      if (conn == Connectivity::grid3d_6) {
        dims = {1 + rng() % 2, 2, 2 + rng() % 2};
      } else {
        dims = {2 + rng() % 3, 2 + rng() % 3};
      }
      const auto g = random_grid(GridShape(dims, conn), rng());
      std::vector<std::string> problems;

      auto dec = decompose_grid(g);
      if (opt.inject_corruption) dec = detail::corrupt(dec);
      auto report = validate(dec, g);
      for (const auto& p : report.problems) problems.push_back("decomposition: " + p);

      const auto bf = brute_force_mincut(g);
      const auto mf = maxflow_mincut(g);
      if (std::abs(mf.energy - bf.energy) > 1e-9) problems.push_back("maxflow energy differs from enumeration");

      if (report.ok()) {
        for (auto a : {Algorithm::bcd, Algorithm::ap, Algorithm::aar, Algorithm::fista}) {
          SolverConfig cfg;
          cfg.algorithm = a;
          cfg.max_iters = 20000;
          cfg.check_every = 1;
          cfg.threads = threads;
          cfg.record_trace = true;
          auto r = solve(g, dec, cfg);
          if (!r.certified) problems.push_back(to_string(a) + ": not certified");
          if (std::abs(r.energy - bf.energy) > 1e-9) problems.push_back(to_string(a) + ": energy differs from enumeration");
          for (const auto& e : r.trace) {
            if (e.gap < -1e-9) {
              problems.push_back(to_string(a) + ": negative gap at iteration " + std::to_string(e.iter));
              break;
            }
          }
        }
      }
      out << "instance " << k << " " << g.shape().describe() << ": " << (problems.empty() ? "ok" : "FAILED") << "\n";
      for (const auto& p : problems) out << "  " << p << "\n";
      if (!problems.empty()) ++failures;
    }
    out << "verified " << opt.instances << " instances, " << failures << " failed\n";
    return failures ? exit_code::failure : exit_code::ok;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  }
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  std::string dims = "64x64";
  std::string connectivity = "2D-4";
  std::uint64_t seed = 1;
  std::string format = "grid";  // grid | grid-text | dimacs
  std::string out;
};

/// Writes a random grid instance (weights uniform in [0, 2], unaries in
/// [-2, 2]).
inline int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.out.empty()) throw usage_error("--out is required");
    GridEnergy g = [&] {
      try {
        return random_grid(GridShape(paracut::detail::parse_dims(opt.dims), parse_connectivity(opt.connectivity)), opt.seed);
      } catch (const invalid_input& e) {
        throw usage_error(e.what());
      }
    }();
    if (opt.format == "grid") {
      write_grid(g, opt.out);
    } else if (opt.format == "grid-text") {
      write_grid(g, opt.out, true);
    } else if (opt.format == "dimacs") {
      write_dimacs(CutInstance::from_grid(g), opt.out);
    } else {
      throw usage_error("--format must be grid, grid-text or dimacs");
    }
    out << "wrote " << g.shape().describe() << " instance with " << g.size() << " nodes and " << g.edges().size()
        << " edges to " << opt.out << "\n";
    return exit_code::ok;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::usage;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::io;
  }
}

// ---------------------------------------------------------------------------
// Flag parsing

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"paracut: parallel min-cut through TV denoising and chain decompositions"};
  app.require_subcommand(1);

  auto add_instance_flags = [](CLI::App* sub, InstanceOptions& o) {
    sub->add_option("--input", o.input, "Instance file");
    sub->add_option("--format", o.format, "grid, dimacs or auto (by magic)")
        ->check(CLI::IsMember({"auto", "grid", "dimacs"}));
    sub->add_option("--grid-dims", o.grid_dims, "Grid layout for a DIMACS instance, e.g. 64x64");
    sub->add_option("--connectivity", o.connectivity, "2D-4, 2D-8 or 3D-6");
  };

  SolveOptions solve_opt;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance");
  add_instance_flags(solve_cmd, solve_opt.instance);
  solve_cmd->add_option("--algo", solve_opt.algo, "aar, ap, bcd, fista or maxflow");
  solve_cmd->add_option("--gap-tol", solve_opt.gap_tol, "Stop once the duality gap is this small");
  solve_cmd->add_option("--max-iters", solve_opt.max_iters);
  solve_cmd->add_option("--threads", solve_opt.threads, "Worker threads (default: PARACUT_THREADS or all cores)");
  solve_cmd->add_option("--check-every", solve_opt.check_every, "Gap evaluation period");
  solve_cmd->add_option("--warm-start", solve_opt.warm_start, "Dual snapshot to start from");
  solve_cmd->add_option("--save-dual", solve_opt.save_dual, "Write the final dual snapshot here");
  solve_cmd->add_flag("--force", solve_opt.force, "Accept a warm start whose fingerprint differs");
  solve_cmd->add_option("--out", solve_opt.out, "Write the labeling, one 0/1 per line");
  solve_cmd->add_option("--trace", solve_opt.trace, "Write a CSV trace of the gap checks");
  solve_cmd->add_option("--scale-pairwise", solve_opt.scale_pairwise, "Multiply every edge weight");

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "Compare algorithms, thread counts and weight scales");
  add_instance_flags(bench_cmd, bench_opt.instance);
  bench_cmd->add_option("--generate", bench_opt.generate_dims, "Random grid dimensions when no --input is given");
  bench_cmd->add_option("--generate-connectivity", bench_opt.generate_connectivity);
  bench_cmd->add_option("--seed", bench_opt.seed);
  bench_cmd->add_option("--algos", bench_opt.algos)->delimiter(',');
  bench_cmd->add_option("--threads", bench_opt.threads)->delimiter(',');
  bench_cmd->add_option("--scales", bench_opt.scales)->delimiter(',');
  bench_cmd->add_option("--max-iters", bench_opt.max_iters);
  bench_cmd->add_option("--gap-tol", bench_opt.gap_tol);

  VerifyOptions verify_opt;
  auto* verify_cmd = app.add_subcommand("verify", "Cross-check solvers against exact oracles");
  verify_cmd->add_option("--seed", verify_opt.seed);
  verify_cmd->add_option("--instances", verify_opt.instances);
  verify_cmd->add_flag("--inject-corruption", verify_opt.inject_corruption,
                       "Break every decomposition on purpose; the run must then fail");
  verify_cmd->add_option("--threads", verify_opt.threads);

  GenerateOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random grid instance");
  gen_cmd->add_option("--dims", gen_opt.dims, "e.g. 64x64 or 32x32x16");
  gen_cmd->add_option("--connectivity", gen_opt.connectivity, "2D-4, 2D-8 or 3D-6");
  gen_cmd->add_option("--seed", gen_opt.seed);
  gen_cmd->add_option("--format", gen_opt.format, "grid, grid-text or dimacs");
  gen_cmd->add_option("--out", gen_opt.out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Prints help for --help (status 0) or the parse error otherwise.
    return app.exit(e, out, err) == 0 ? exit_code::ok : exit_code::usage;
  }

  if (*solve_cmd) return cmd_solve(solve_opt, out, err);
  if (*bench_cmd) return cmd_bench(bench_opt, out, err);
  if (*gen_cmd) return cmd_generate(gen_opt, out, err);
  return cmd_verify(verify_opt, out, err);
}

}  // namespace paracut::cli
