#include "cli.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "commlink/codesign.hpp"
#include "commlink/errors.hpp"
#include "commlink/io.hpp"

namespace commlink::cli {
namespace {

namespace fs = std::filesystem;

struct Inputs {
  std::string plant;
  std::string edges;
  std::string base;
  std::string graph;
  std::string fir;
  std::string config;
};

void write_json(const fs::path& path, const Json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

Json manifest(const std::string& command, const Json& inputs,
              const CodesignConfig& cfg, const Json& options) {
  Json m;
  m["command"] = command;
  m["version"] = COMMLINK_VERSION;
  m["inputs"] = inputs;
  m["config"] = save_config(cfg);
  m["seed"] = cfg.seed;
  m["options"] = options;
  return m;
}

CodesignConfig config_from(const std::string& path) {
  if (path.empty()) return CodesignConfig{};
  CodesignConfig cfg = load_config(read_json_file(path));
  validate_config(cfg);
  return cfg;
}

Graph base_from(const std::string& path, const PlantModel& plant,
                const Partition& part, double tolZero) {
  Graph base = path.empty() ? base_graph(plant, part, tolZero)
                            : load_graph(read_json_file(path));
  if (base.n() != part.n) {
    throw InputError("n", "graph has " + std::to_string(base.n()) +
                              " nodes but the partition has " +
                              std::to_string(part.n));
  }
  return base;
}

std::string padded_index(std::size_t k, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(count).size());
  std::ostringstream os;
  os << std::setw(static_cast<int>(width)) << std::setfill('0') << k;
  return os.str();
}

void print_delays(std::ostream& out, const DelayMatrix& d) {
  for (int i = 0; i < d.n(); ++i) {
    out << ' ';
    for (int j = 0; j < d.n(); ++j) {
      out << ' ' << std::setw(3)
          << (is_finite_delay(d(i, j)) ? std::to_string(d(i, j)) : "inf");
    }
    out << '\n';
  }
}

int cmd_codesign(const Inputs& in, std::optional<double> lambda, bool sweep,
                 bool trace, const fs::path& outDir, std::ostream& out,
                 std::ostream& err) {
  CodesignConfig cfg = config_from(in.config);
  auto [plant, part] = load_plant(read_json_file(in.plant));
  const EdgeSet edges = load_edges(read_json_file(in.edges));
  const Graph base = base_from(in.base, plant, part, cfg.tolZero);
  const CodesignProblem problem(plant, part, base, edges, cfg);

  std::vector<CodesignResult> rows;
  if (sweep) {
    rows = lambda_sweep(problem);
  } else {
    if (!(*lambda >= 0.0) || !std::isfinite(*lambda)) {
      throw PreconditionError("--lambda must be finite and >= 0");
    }
    rows.push_back(problem.run(*lambda, trace));
  }

  CodesignConfig resolved = cfg;
  resolved.N = problem.N();
  resolved.checkHorizon = problem.check_horizon();
  resolved.lambdaGrid = sweep ? problem.lambda_grid() : std::vector<double>{*lambda};

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_text_atomic(outDir / "sweep.csv", csv.str());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string tag = padded_index(k, rows.size());
    if (rows[k].gammaDes.n() > 0) {
      write_json(outDir / ("graph_" + tag + ".json"), save_graph(rows[k].gammaDes));
      write_json(outDir / ("controller_" + tag + ".json"), save_fir(rows[k].controller));
    }
    if (trace) {
      std::ostringstream tcsv;
      write_trace_csv(tcsv, rows[k].trace);
      write_text_atomic(outDir / ("trace_" + tag + ".csv"), tcsv.str());
    }
  }
  const Json inputs = {{"plant", in.plant}, {"edges", in.edges},
                       {"base", in.base},   {"config", in.config}};
  Json options = {{"sweep", sweep}, {"trace", trace}};
  if (lambda) options["lambda"] = *lambda;
  write_json(outDir / "manifest.json", manifest("codesign", inputs, resolved, options));

  out << "lambda_max = " << format_double(problem.lambda_max()) << '\n';
  bool converged = true;
  for (const auto& r : rows) {
    out << "lambda " << format_double(r.lambda) << ": edges {"
        << format_edges(r.selectedEdges) << "}, nu = " << format_double(r.nuPolished)
        << (r.diagnostics.converged ? "" : " (not converged)") << '\n';
    for (const auto& w : r.diagnostics.warnings) err << "warning: " << w << '\n';
    converged = converged && r.diagnostics.converged;
  }
  if (!converged) {
    err << "error: solver did not reach the requested duality gap\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_enumerate(const Inputs& in, const fs::path& outDir, std::ostream& out) {
  CodesignConfig cfg = config_from(in.config);
  auto [plant, part] = load_plant(read_json_file(in.plant));
  const EdgeSet edges = load_edges(read_json_file(in.edges));
  if (edges.size() > kMaxEnumerationEdges) {
    throw PreconditionError("enumeration is limited to " +
                            std::to_string(kMaxEnumerationEdges) +
                            " candidate edges (got " +
                            std::to_string(edges.size()) + ")");
  }
  const Graph base = base_from(in.base, plant, part, cfg.tolZero);
  const CodesignProblem problem(plant, part, base, edges, cfg);
  const std::vector<EnumerationRow> rows = enumerate_solve(problem);
  const NestingReport report = nesting_report(rows);

  std::ostringstream csv;
  write_enumeration_csv(csv, rows);
  write_text_atomic(outDir / "enumerate.csv", csv.str());
  std::ostringstream txt;
  write_nesting_report(txt, report, rows);
  write_text_atomic(outDir / "nesting_report.txt", txt.str());

  CodesignConfig resolved = cfg;
  resolved.N = problem.N();
  resolved.checkHorizon = problem.check_horizon();
  const Json inputs = {{"plant", in.plant}, {"edges", in.edges},
                       {"base", in.base},   {"config", in.config}};
  write_json(outDir / "manifest.json",
             manifest("enumerate", inputs, resolved, Json::object()));

  out << rows.size() << " graphs, " << report.violations.size()
      << " nesting violations\n";
  return kExitOk;
}

int cmd_qi_check(const Inputs& in, const fs::path& outDir, std::ostream& out) {
  const CodesignConfig cfg = config_from(in.config);
  auto [plant, part] = load_plant(read_json_file(in.plant));
  const Graph g = load_graph(read_json_file(in.graph));
  if (g.n() != part.n) {
    throw InputError("n", "graph has " + std::to_string(g.n()) +
                              " nodes but the partition has " +
                              std::to_string(part.n));
  }
  const Json inputs = {{"plant", in.plant}, {"graph", in.graph}, {"config", in.config}};
  write_json(outDir / "manifest.json",
             manifest("qi-check", inputs, cfg, Json::object()));

  const DelayMatrix c = comm_delays(g);
  const PropagationDelays p = plant_propagation_delays(plant, part, cfg.tolZero);
  out << "communication delays c(i,j):\n";
  print_delays(out, c);
  out << "propagation delays p(i,j):\n";
  print_delays(out, p.delays);
  const std::optional<int> d = graph_delay(g);
  out << "graph delay d = " << (d ? std::to_string(*d) : "inf") << '\n';

  const Graph base = base_graph(plant, part, cfg.tolZero);
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) {
      if (base.adj(i, j) && !g.adj(i, j)) {
        out << "certificate: FAIL (graph does not contain the base graph: "
            << "missing link " << j + 1 << " -> " << i + 1
            << "; the design set is nested above the base graph)\n";
        return kExitCheckFailed;
      }
    }
  }
  if (!d) {
    out << "certificate: FAIL (infinite graph delay)\n";
    return kExitCheckFailed;
  }
  const QiCertificate cert = qi_delay_check(c, p.delays);
  if (!cert.ok) {
    out << "certificate: FAIL (" << describe_violations(cert) << ")\n";
    return kExitCheckFailed;
  }
  if (!qi_product_check(g, plant, part, *d, cfg.tolZero)) {
    out << "certificate: FAIL (subspace is not closed under K G22 K)\n";
    return kExitCheckFailed;
  }
  out << "certificate: PASS\n";
  return kExitOk;
}

int cmd_comm_norm(const Inputs& in, const fs::path& outDir, std::ostream& out) {
  const CodesignConfig cfg = config_from(in.config);
  auto [plant, part] = load_plant(read_json_file(in.plant));
  const Graph base = base_from(in.graph, plant, part, cfg.tolZero);
  const EdgeSet edges = load_edges(read_json_file(in.edges));
  const FirTM X = load_fir(read_json_file(in.fir));
  if (X.rows() != plant.p2() || X.cols() != plant.q2()) {
    throw InputError("rows", "FIR coefficients must be p2 x q2");
  }
  const std::optional<int> d = graph_delay(base);
  if (!d) throw PreconditionError("base graph has infinite graph delay");
  if (X.t_max() > *d) {
    throw PreconditionError("FIR horizon " + std::to_string(X.t_max()) +
                            " exceeds the base graph delay " + std::to_string(*d));
  }
  const GroupSpec spec = make_group_spec(base, edges, part, std::max(1, *d));
  CommNormOptions opts;
  opts.tolZero = cfg.tolZero;
  const CommNormResult r = comm_link_norm(X, spec, opts);

  const Json inputs = {{"fir", in.fir},     {"plant", in.plant},
                       {"graph", in.graph}, {"edges", in.edges},
                       {"config", in.config}};
  write_json(outDir / "manifest.json",
             manifest("comm-norm", inputs, cfg, Json::object()));
  out << (r.infinite ? std::string("infinite") : format_double(r.value)) << '\n';
  return kExitOk;
}

int cmd_gen_example(int n, std::uint64_t seed, double couple,
                    const fs::path& outDir, std::ostream& out) {
  if (n < 2) throw PreconditionError("--n: n >= 2 required");
  auto [plant, part] = gen_chain_plant(n, couple, seed);
  const Graph base = base_graph(plant, part);
  constexpr std::size_t kMaxEdges = 6;
  const EdgeSet edges = edges_at_distance(base, 2, kMaxEdges);
  write_json(outDir / "plant.json", save_plant(plant, part));
  write_json(outDir / "edges.json", save_edges(edges));
  write_json(outDir / "base.json", save_graph(base));
  const Json options = {{"n", n}, {"seed", seed}, {"couple", couple}};
  CodesignConfig cfg;
  cfg.seed = seed;
  write_json(outDir / "manifest.json",
             manifest("gen-example", Json::object(), cfg, options));
  out << "wrote chain example with " << n << " subsystems and " << edges.size()
      << " candidate edges to " << outDir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Joint design of a distributed H2 controller and its communication graph",
               "commlink"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(COMMLINK_VERSION));

  Inputs in;
  std::string outDir = ".";
  std::optional<double> lambda;
  bool sweep = false;
  bool trace = false;
  int n = 0;
  std::uint64_t seed = 0;
  double couple = 0.2;

  auto* codesign = app.add_subcommand("codesign", "Regularized co-design and polish");
  codesign->add_option("--plant", in.plant, "Plant JSON")->required();
  codesign->add_option("--edges", in.edges, "Candidate edges JSON")->required();
  codesign->add_option("--base", in.base, "Base graph JSON (default: bsupp(A))");
  codesign->add_option("--config", in.config, "Config or manifest JSON");
  codesign->add_option("--out", outDir, "Output directory");
  auto* lambdaOpt = codesign->add_option("--lambda", lambda, "Regularization weight");
  auto* sweepOpt = codesign->add_flag("--sweep", sweep, "Run the lambda sweep");
  lambdaOpt->excludes(sweepOpt);
  codesign->add_flag("--trace", trace, "Write per-run solver traces");

  auto* enumerate = app.add_subcommand("enumerate", "Polish every design-set graph");
  enumerate->add_option("--plant", in.plant, "Plant JSON")->required();
  enumerate->add_option("--edges", in.edges, "Candidate edges JSON")->required();
  enumerate->add_option("--base", in.base, "Base graph JSON (default: bsupp(A))");
  enumerate->add_option("--config", in.config, "Config or manifest JSON");
  enumerate->add_option("--out", outDir, "Output directory");

  auto* qi = app.add_subcommand("qi-check", "Quadratic invariance certificate");
  qi->add_option("--plant", in.plant, "Plant JSON")->required();
  qi->add_option("--graph", in.graph, "Communication graph JSON")->required();
  qi->add_option("--config", in.config, "Config or manifest JSON");
  qi->add_option("--out", outDir, "Output directory");

  auto* norm = app.add_subcommand("comm-norm", "Communication link norm of an FIR");
  norm->add_option("--fir", in.fir, "FIR JSON")->required();
  norm->add_option("--plant", in.plant, "Plant JSON")->required();
  norm->add_option("--graph", in.graph, "Base graph JSON")->required();
  norm->add_option("--edges", in.edges, "Candidate edges JSON")->required();
  norm->add_option("--config", in.config, "Config or manifest JSON");
  norm->add_option("--out", outDir, "Output directory");

  auto* gen = app.add_subcommand("gen-example", "Write a seeded chain example");
  gen->add_option("--n", n, "Number of subsystems")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--couple", couple, "Coupling between neighbours");
  gen->add_option("--out", outDir, "Output directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (codesign->parsed()) {
      if (!lambda && !sweep) {
        err << "error: codesign needs --lambda VALUE or --sweep\n";
        return kExitInvalid;
      }
      return cmd_codesign(in, lambda, sweep, trace, outDir, out, err);
    }
    if (enumerate->parsed()) return cmd_enumerate(in, outDir, out);
    if (qi->parsed()) return cmd_qi_check(in, outDir, out);
    if (norm->parsed()) return cmd_comm_norm(in, outDir, out);
    return cmd_gen_example(n, seed, couple, outDir, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace commlink::cli
