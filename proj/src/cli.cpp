#include "fairclust/cli.hpp"

#include "fairclust/errors.hpp"
#include "fairclust/fairness.hpp"
#include "fairclust/oracle.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace fairclust {

using nlohmann::json;

namespace {

const std::vector<std::string> kModes{"lp-round", "kcenter", "oracle", "audit", "fl"};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json timings_json(const std::vector<std::pair<std::string, double>>& timings) {
  json t = json::object();
  for (const auto& [name, sec] : timings) t[name] = sec;
  return t;
}

std::vector<int> read_centers_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open centers file " + path);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw ParseError(std::string("malformed centers JSON: ") + e.what(), line);
  }
  try {
    if (doc.is_object()) doc = doc.at("centers");
    return doc.get<std::vector<int>>();
  } catch (const json::exception&) {
    throw ParseError("centers file must hold an array of point ids or {\"centers\": [...]}");
  }
}

MatroidFLOptions fl_options(const RunConfig& cfg) {
  MatroidFLOptions o;
  o.exact_rational = cfg.exact_rational;
  if (!cfg.dump_lp.empty()) {
    std::filesystem::create_directories(cfg.dump_lp);
    const std::string dir = cfg.dump_lp;
    o.on_lp = [dir](const std::string& stage, const LinearProgram<double>& lp) {
      std::ofstream f(std::filesystem::path(dir) / (stage + ".lp"));
      write_lp_format(f, lp);
    };
  }
  return o;
}

json run_mode(const RunConfig& cfg, bool& infeasible) {
  infeasible = false;
  if (cfg.mode == "fl") {
    std::ifstream in(cfg.input);
    if (!in) throw ParameterError("cannot open input " + cfg.input);
    const auto inst = read_fl_instance(in);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = solve_matroid_fl(inst, fl_options(cfg));
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json open = json::array();
    for (std::size_t u : res.open) open.push_back(inst.facilities()[u].id);
    json r = {{"schema_version", kReportSchemaVersion},
              {"mode", "fl"},
              {"open", open},
              {"cost", res.final_cost},
              {"p", inst.p()},
              {"certificate_chain", chain_to_json(res.chain)},
              {"timings", cfg.emit_timings ? json{{"matroid_fl", sec}} : json::object()},
              {"config", config_to_json(cfg)}};
    return r;
  }

  LoadOptions lo;
  lo.dedup = cfg.dedup;
  const Dataset ds = read_dataset_csv_file(cfg.input, lo);

  if (cfg.mode == "lp-round" || cfg.mode == "kcenter") {
    SolveOptions so;
    so.fl = fl_options(cfg);
    so.record_timings = cfg.emit_timings;
    const SolveReport rep = cfg.mode == "lp-round"
                                ? solve_fair_clustering(ds, cfg.k, cfg.alpha, cfg.epsilon, cfg.p, so)
                                : solve_fair_kcenter(ds, cfg.k, cfg.alpha, cfg.epsilon, so);
    return report_to_json(rep, cfg);
  }

  if (cfg.mode == "oracle") {
    const auto objective =
        cfg.objective == "radius" ? ClusterObjective::kcenter_radius : ClusterObjective::lp_cost;
    const auto res = oracle_fair_clustering(ds, cfg.k, cfg.alpha, cfg.p, objective);
    infeasible = !res.feasible();
    return {{"schema_version", kReportSchemaVersion},
            {"mode", "oracle"},
            {"objective", cfg.objective},
            {"feasible", res.feasible()},
            {"centers", res.witness},
            {"cost", res.value ? json(*res.value) : json(nullptr)},
            {"p", cfg.p},
            {"alpha", cfg.alpha},
            {"k", cfg.k},
            {"search_space", res.search_space},
            {"timings", cfg.emit_timings ? json{{"oracle", res.elapsed}} : json::object()},
            {"config", config_to_json(cfg)}};
  }

  // audit
  const auto ids = read_centers_file(cfg.centers);
  if (ids.empty()) throw ParameterError("centers file lists no centers");
  const auto idx = ds.indices_of(ids);
  const auto audit = fairness_audit_indexed(ds, idx, fair_radii(ds, cfg.k));
  json ratios = json::array();
  for (std::size_t v = 0; v < ds.size(); ++v)
    ratios.push_back({{"id", ds.id(v)}, {"ratio", number_or_null(audit.ratio(static_cast<Eigen::Index>(v)))}});
  return {{"schema_version", kReportSchemaVersion},
          {"mode", "audit"},
          {"centers", ids},
          {"k", cfg.k},
          {"fairness_max_ratio", number_or_null(audit.max_ratio)},
          {"ratios", ratios},
          {"timings", json::object()},
          {"config", config_to_json(cfg)}};
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (std::find(kModes.begin(), kModes.end(), cfg.mode) == kModes.end())
    throw ParameterError("unknown mode '" + cfg.mode + "'");
  if (cfg.input.empty()) throw ParameterError("--input is required");
  if (cfg.mode == "fl") return;
  if (cfg.k < 1) throw ParameterError("--k must be a positive integer");
  if (cfg.mode == "audit") {
    if (cfg.centers.empty()) throw ParameterError("audit mode needs --centers");
    return;
  }
  if (!(cfg.alpha >= 1.0) || !std::isfinite(cfg.alpha)) throw ParameterError("--alpha must be >= 1");
  if (cfg.mode != "kcenter" && (!(cfg.p >= 1.0) || !std::isfinite(cfg.p)))
    throw ParameterError("--p must be >= 1");
  if (cfg.mode == "lp-round" && !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw ParameterError("--epsilon must lie in (0, 1)");
  if (cfg.mode == "kcenter" && !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5))
    throw ParameterError("--epsilon must lie in (0, 1/2) for kcenter");
  if (cfg.mode == "oracle" && cfg.objective != "cost" && cfg.objective != "radius")
    throw ParameterError("--objective must be cost or radius");
}

json config_to_json(const RunConfig& cfg) {
  return {{"input", cfg.input},       {"mode", cfg.mode},
          {"k", cfg.k},               {"alpha", cfg.alpha},
          {"p", cfg.p},               {"epsilon", cfg.epsilon},
          {"seed", cfg.seed},         {"dedup", cfg.dedup},
          {"exact_rational", cfg.exact_rational}};
}

json chain_to_json(const CertificateChain& c) {
  json links = json::array();
  for (const auto& l : c.links)
    links.push_back({{"name", l.name}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"holds", l.holds},
                     {"guaranteed", l.guaranteed}});
  return {{"p", c.p},
          {"z_lp", c.z_lp},
          {"cost_lp_on_consolidated", c.cost_lp_on_consolidated},
          {"cost_intermediate", c.cost_intermediate},
          {"T_intermediate", c.T_intermediate},
          {"T_half", c.T_half},
          {"cost_half", c.cost_half},
          {"H_intermediate", c.H_intermediate},
          {"H_integral", c.H_integral},
          {"cost_integral", c.cost_integral},
          {"final_cost", c.final_cost},
          {"half_factor", c.half_factor},
          {"integral_factor", c.integral_factor},
          {"certified_factor", c.certified_factor},
          {"verified", c.verified()},
          {"links", links}};
}

json report_to_json(const SolveReport& rep, const RunConfig& cfg) {
  json r = {{"schema_version", kReportSchemaVersion},
            {"mode", rep.mode},
            {"centers", rep.centers},
            {"cost", rep.cost},
            {"p", number_or_null(rep.p)},
            {"alpha", rep.alpha},
            {"k", rep.k},
            {"epsilon", rep.epsilon},
            {"beta", rep.beta},
            {"regions", rep.regions},
            {"trivial", rep.trivial},
            {"fairness_max_ratio", number_or_null(rep.fairness_max_ratio)},
            {"region_feasible", rep.region_feasible},
            {"reduced_cost", rep.reduced_cost},
            {"certificate_chain", rep.chain ? chain_to_json(*rep.chain) : json(nullptr)},
            {"timings", timings_json(rep.timings)},
            {"config", config_to_json(cfg)}};
  if (rep.kcenter) {
    r["kcenter"] = {{"threshold", rep.kcenter->threshold},
                    {"reduced_radius", rep.kcenter->reduced_radius},
                    {"radius", rep.kcenter->radius}};
  }
  return r;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  json report;
  bool infeasible = false;
  try {
    validate(cfg);
    report = run_mode(cfg, infeasible);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const TooLarge& e) {
    err << "too large: " << e.what() << '\n';
    return kExitError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  const std::string text = report.dump(2) + "\n";
  if (cfg.output.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << cfg.output << '\n';
      return kExitError;
    }
    f << text;
  }
  if (infeasible) err << "infeasible: no center set satisfies the fairness constraint\n";
  return infeasible ? kExitInfeasible : kExitOk;
}

std::vector<Point> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.dims < 1) throw ParameterError("dims must be positive");
  if (spec.clusters < 1) throw ParameterError("cluster count must be positive");
  if (!(spec.spread >= 0.0)) throw ParameterError("spread must be nonnegative");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> box(0.0, 100.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> centers(static_cast<std::size_t>(spec.clusters));
  for (auto& c : centers) {
    c.resize(spec.dims);
    for (int j = 0; j < spec.dims; ++j) c(j) = box(rng);
  }
  std::vector<Point> pts;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t cl = i % centers.size();
    const double sigma = spec.spread * (1.0 + 4.0 * static_cast<double>(cl));
    Point p;
    p.id = static_cast<int>(i);
    p.coords.resize(spec.dims);
    for (int j = 0; j < spec.dims; ++j) p.coords(j) = centers[cl](j) + sigma * gauss(rng);
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<SweepRow> sweep_alpha(const Dataset& ds, const RunConfig& base,
                                  const std::vector<double>& alphas, unsigned jobs) {
  std::vector<SweepRow> rows(alphas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < alphas.size();) {
      rows[i].alpha = alphas[i];
      try {
        rows[i].report = base.mode == "kcenter"
                             ? solve_fair_kcenter(ds, base.k, alphas[i], base.epsilon)
                             : solve_fair_clustering(ds, base.k, alphas[i], base.epsilon, base.p);
      } catch (const InfeasibleError&) {
        rows[i].feasible = false;
      }
    }
  };
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(alphas.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "alpha,feasible,cost,fairness_max_ratio,regions,centers\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.alpha << ',' << (r.feasible ? 1 : 0) << ',';
    if (r.feasible) {
      out << r.report.cost << ',' << r.report.fairness_max_ratio << ',' << r.report.regions << ',';
      for (std::size_t i = 0; i < r.report.centers.size(); ++i)
        out << (i ? ";" : "") << r.report.centers[i];
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fair k-clustering under l_p cost via matroid facility location"};
  app.require_subcommand(0, 1);

  RunConfig cfg;
  app.add_option("--input,-i", cfg.input, "Dataset CSV (or FL instance JSON for --mode fl)");
  app.add_option("--output,-o", cfg.output, "Report path (default: stdout)");
  app.add_option("--mode", cfg.mode, "lp-round | kcenter | oracle | audit | fl")
      ->check(CLI::IsMember(kModes));
  app.add_option("--k", cfg.k, "Number of centers");
  app.add_option("--alpha", cfg.alpha, "Fairness parameter (>= 1)");
  app.add_option("--p", cfg.p, "Cost exponent (>= 1)");
  app.add_option("--epsilon", cfg.epsilon, "Accuracy parameter")->capture_default_str();
  app.add_option("--centers", cfg.centers, "Centers JSON for --mode audit");
  app.add_option("--objective", cfg.objective, "Oracle objective: cost | radius");
  app.add_option("--seed", cfg.seed, "Seed echoed in the report");
  app.add_flag("--dedup", cfg.dedup, "Merge co-located records, summing weights");
  app.add_flag("--exact-rational", cfg.exact_rational, "Solve rounding polytopes in exact rationals");
  app.add_option("--dump-lp", cfg.dump_lp, "Directory for LP dumps of every solved program");
  app.add_flag("--emit-timings", cfg.emit_timings, "Record wall-clock stage timings in the report");

  SyntheticSpec gen;
  std::string gen_out;
  auto* g = app.add_subcommand("generate", "Write a synthetic clustered dataset as CSV");
  g->add_option("--n", gen.n, "Number of points")->required()->check(CLI::PositiveNumber);
  g->add_option("--dims", gen.dims, "Dimension")->capture_default_str();
  g->add_option("--clusters", gen.clusters, "Number of clusters")->capture_default_str();
  g->add_option("--spread", gen.spread, "Base cluster standard deviation")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--output,-o", gen_out, "CSV path (default: stdout)");

  RunConfig sw;
  std::vector<double> alphas{1.0, 1.5, 2.0, 3.0};
  unsigned jobs = 1;
  std::string sw_out;
  auto* s = app.add_subcommand("sweep", "CSV of cost and fairness versus alpha");
  s->add_option("--input,-i", sw.input, "Dataset CSV")->required();
  s->add_option("--k", sw.k, "Number of centers")->required();
  s->add_option("--p", sw.p, "Cost exponent")->capture_default_str();
  s->add_option("--epsilon", sw.epsilon, "Accuracy parameter")->capture_default_str();
  s->add_option("--mode", sw.mode, "lp-round | kcenter")->check(CLI::IsMember({"lp-round", "kcenter"}));
  s->add_option("--alphas", alphas, "Comma-separated alpha values")->delimiter(',');
  s->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  s->add_flag("--dedup", sw.dedup, "Merge co-located records");
  s->add_option("--output,-o", sw_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  auto emit = [&](const std::string& path, const std::string& text) {
    if (path.empty()) {
      out << text;
      return true;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << path << '\n';
      return false;
    }
    f << text;
    return true;
  };

  try {
    if (*g) {
      std::ostringstream csv;
      write_points_csv(csv, generate_synthetic(gen));
      return emit(gen_out, csv.str()) ? kExitOk : kExitError;
    }
    if (*s) {
      sw.alpha = alphas.empty() ? 1.0 : alphas.front();
      validate(sw);
      for (double a : alphas)
        if (!(a >= 1.0)) throw ParameterError("every alpha must be >= 1");
      LoadOptions lo;
      lo.dedup = sw.dedup;
      const auto ds = read_dataset_csv_file(sw.input, lo);
      std::ostringstream csv;
      write_sweep_csv(csv, sweep_alpha(ds, sw, alphas, jobs));
      return emit(sw_out, csv.str()) ? kExitOk : kExitError;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return run(cfg, out, err);
}

}  // namespace fairclust
