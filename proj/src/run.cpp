#include "mmot/run.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace mmot {

using nlohmann::json;

namespace {

json num(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(num(v(k)));
  return out;
}

json mat(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) out.push_back(vec(M.row(r).transpose()));
  return out;
}

json point_json(const Point& x) {
  json out = json::array();
  for (const auto& v : x) out.push_back(vec(v));
  return out;
}

json sig(const Signature& s, bool with_eigenvalues = false) {
  json out = {{"q_plus", s.q_plus}, {"q_minus", s.q_minus}, {"q_zero", s.q_zero}, {"zero_tol", num(s.zero_tol)}};
  if (with_eigenvalues) {
    json ev = json::array();
    for (double v : s.eigenvalues) ev.push_back(num(v));
    out["eigenvalues"] = ev;
  }
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

bool all_one_dimensional(const CostSpec& cost) {
  for (int d : cost.dims()) {
    if (d != 1) return false;
  }
  return true;
}

bool equal_dims(const CostSpec& cost) {
  for (int d : cost.dims()) {
    if (d != cost.dim(0)) return false;
  }
  return true;
}

struct PointAnalysis {
  json report;
  Signature direct;
  bool rank_ok = true;
  std::optional<bool> shortcut_agrees;
  std::optional<bool> recursion_agrees;
  std::optional<bool> bipartite_agrees;
  std::optional<bool> necessary_all_pass;
};

PointAnalysis analyze_point(const RunConfig& cfg, std::size_t index) {
  const CostSpec& cost = *cfg.cost;
  const Point& x = cfg.points[index];
  const double zero_tol = cfg.zero_tol.value_or(-1.0);
  PointAnalysis out;
  json& r = out.report;
  r["index"] = index;
  r["point"] = point_json(x);

  const auto metric = assemble_metric(cost, x, *cfg.weights);
  out.direct = signature(metric, zero_tol);
  r["signature"] = sig(out.direct, true);
  r["dimension_bound"] = dimension_bound(out.direct);
  r["graph_dimension_bound"] = graph_dimension_bound(out.direct);
  r["bounds_differ"] = dimension_bound(out.direct) != graph_dimension_bound(out.direct);
  r["skew_residual"] = num(metric.skew_residual);

  if (cfg.checks.rank_bound) {
    const auto rb = rank_bound_check(metric, 1e-10, zero_tol);
    json ranks = json::array();
    for (int a = 0; a < rb.ranks.rows(); ++a) {
      json row = json::array();
      for (int b = 0; b < rb.ranks.cols(); ++b) row.push_back(rb.ranks(a, b));
      ranks.push_back(row);
    }
    r["rank_bounds"] = {{"ranks", ranks},
                        {"max_rank", rb.max_rank},
                        {"holds", rb.holds},
                        {"margin_plus", rb.margin_plus},
                        {"margin_minus", rb.margin_minus}};
    out.rank_ok = rb.holds;
  }
  if (cfg.checks.shortcut) {
    try {
      const auto s = signature_m3_shortcut(metric, zero_tol);
      out.shortcut_agrees = s.same_counts(out.direct);
      r["shortcut"] = {{"applicable", true}, {"signature", sig(s)}, {"agrees", *out.shortcut_agrees}};
    } catch (const ShortcutInapplicable& e) {
      r["shortcut"] = {{"applicable", false}, {"reason", e.what()}};
    }
  }
  if (cfg.checks.recursion) {
    const auto rec = signature_recursive(metric, zero_tol);
    out.recursion_agrees = rec.signature.same_counts(out.direct);
    json steps = json::array();
    for (const auto& st : rec.steps) {
      steps.push_back(
          {{"added_marginal", st.added_marginal + 1}, {"schur", sig(st.schur)}, {"running", sig(st.running)}});
    }
    r["recursion"] = {{"signature", sig(rec.signature)},
                      {"agrees", *out.recursion_agrees},
                      {"fell_back", rec.fell_back},
                      {"reason", rec.reason},
                      {"steps", steps}};
  }
  if (cfg.checks.necessary_condition) {
    if (cost.marginals() >= 3 && equal_dims(cost) && cost.is_builtin()) {
      const auto nc = necessary_condition_check(cost, x);
      json triples = json::array();
      for (const auto& t : nc.triples) {
        triples.push_back({{"triple", {t.i + 1, t.j + 1, t.k + 1}},
                           {"applicable", t.applicable},
                           {"negative_definite", t.negative_definite},
                           {"max_eigenvalue", num(t.max_eigenvalue)}});
      }
      out.necessary_all_pass = nc.all_pass;
      r["necessary_condition"] = {{"applicable", true},
                                  {"all_pass", nc.all_pass},
                                  {"excludes_timelike_optimum", nc.excludes_timelike_optimum},
                                  {"triples", triples}};
    } else {
      r["necessary_condition"] = {{"applicable", false}, {"reason", "needs m >= 3 equal-dimension marginals"}};
    }
  }
  if (cfg.checks.frame) {
    const auto f = diagonalizing_frame(metric, zero_tol);
    json h = json::array();
    for (Eigen::Index k = 0; k < f.h.size(); ++k) h.push_back(f.h(k));
    r["frame"] = {{"h", h}, {"residual", num(f.residual)}, {"U", mat(f.U)}};
  }
  if (cfg.checks.bipartite) {
    json parts = json::array();
    bool agree = true;
    for (const auto& p : enumerate_partitions(cost.marginals())) {
      const auto formula = bipartite_signature(cost, x, p);
      const auto direct = signature(assemble_metric(cost, x, PartitionWeights::single(cost.marginals(), p)), zero_tol);
      const bool same = formula.same_counts(direct);
      agree = agree && same;
      parts.push_back({{"partition", p.label()}, {"formula", sig(formula)}, {"direct", sig(direct)}, {"agrees", same}});
    }
    out.bipartite_agrees = agree;
    r["bipartite"] = parts;
  }
  return out;
}

std::vector<PointAnalysis> analyze_points(const RunConfig& cfg, int threads) {
  const std::size_t count = cfg.points.size();
  std::vector<PointAnalysis> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        results[k] = analyze_point(cfg, k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NumericalError& e) {
      throw NumericalError("point " + std::to_string(k) + ": " + e.what(), e.trace());
    } catch (const UnsupportedError& e) {
      throw UnsupportedError("point " + std::to_string(k) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("point " + std::to_string(k) + ": " + e.what());
    }
  }
  return results;
}

json monotonicity_json(const MonotonicityReport& m) {
  json v = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(m.violations.size(), 10); ++k) {
    v.push_back({{"first", m.violations[k].first},
                 {"second", m.violations[k].second},
                 {"defect", num(m.violations[k].defect)}});
  }
  return {{"partition", m.partition.label()},
          {"pairs_checked", m.pairs_checked},
          {"violation_count", m.violations.size()},
          {"max_defect", num(m.max_defect)},
          {"violations", v}};
}

json projection_json(const SupportSet& support, std::vector<CheckOutcome>& checks, const std::string& prefix, int m) {
  json out = json::array();
  bool all = true;
  for (int j = 1; j < m; ++j) {
    const auto pr = projection_monotone_check(support, j, 1e-12);
    all = all && pr.monotone;
    json w = json::array();
    for (std::size_t k = 0; k < std::min<std::size_t>(pr.witnesses.size(), 10); ++k) {
      w.push_back({pr.witnesses[k].first, pr.witnesses[k].second});
    }
    out.push_back(
        {{"marginal", j + 1}, {"monotone", pr.monotone}, {"min_product", num(pr.min_product)}, {"witnesses", w}});
  }
  checks.push_back({prefix + "projection_monotone", all, out});
  return out;
}

json solve_section(const RunConfig& cfg, std::vector<CheckOutcome>& checks) {
  const CostSpec& cost = *cfg.cost;
  const SolverConfig& sc = *cfg.solver;
  json s;
  json sizes = json::array();
  for (const auto& g : sc.grids) sizes.push_back(g.size());
  s["grid_sizes"] = sizes;

  const auto problem = build_lp(cost, sc.grids);
  const auto solution = solve_lp(problem, cost, sc.grids, sc.tol);
  const auto opt = verify_optimality(solution.plan, solution.certificate, cost, sc.grids, sc.tol);
  s["objective"] = num(solution.plan.objective);
  s["dual_value"] = num(solution.certificate.dual_value);
  s["gap"] = num(solution.certificate.gap);
  s["pivots"] = solution.pivots;
  s["variables"] = problem.tuple_cost.size();
  s["constraints"] = problem.constraint_count;
  s["certificate"] = {{"primal_feasible", opt.primal_feasible},
                      {"dual_feasible", opt.dual_feasible},
                      {"complementary_slackness", opt.complementary_slackness},
                      {"gap_ok", opt.gap_ok},
                      {"optimal", opt.optimal()},
                      {"scale", num(opt.scale)},
                      {"max_marginal_error", num(opt.max_marginal_error)},
                      {"max_dual_violation", num(opt.max_dual_violation)},
                      {"max_slackness_violation", num(opt.max_slackness_violation)},
                      {"witness", opt.witness}};
  checks.push_back({"solve.certificate", opt.optimal(), s["certificate"]});

  json atoms = json::array();
  for (const auto& a : solution.plan.atoms) atoms.push_back({{"index", a.index}, {"mass", num(a.mass)}});
  s["plan"] = atoms;

  const auto diag = support_diagnostics(cost, solution.plan, sc.grids, *cfg.weights, sc.radius, sc.mass_tol);
  s["support_size"] = diag.support.support.size();
  s["discarded_mass"] = num(diag.support.discarded_mass);
  s["basepoint"] = point_json(diag.basepoint);
  s["spacelike_score"] = {
      {"conclusive", diag.spacelike.conclusive}, {"value", num(diag.spacelike.value)}, {"pairs", diag.spacelike.pairs}};
  s["graph_inequality"] = {{"conclusive", diag.graph.raw.conclusive},
                           {"raw", num(diag.graph.raw.value)},
                           {"normalized", num(diag.graph.normalized)},
                           {"pairs", diag.graph.raw.pairs}};
  json mono = json::array();
  std::size_t violations = 0;
  for (const auto& m : diag.monotonicity) {
    mono.push_back(monotonicity_json(m));
    violations += m.violations.size();
  }
  s["monotonicity"] = mono;
  checks.push_back({"solve.c_monotone", violations == 0, {{"violations", violations}}});

  if (cfg.checks.projection && all_one_dimensional(cost)) {
    s["projection"] = projection_json(diag.support.support, checks, "solve.", cost.marginals());
  }

  if (!sc.plans.empty()) {
    std::vector<TransportPlan> plans;
    for (const auto& atoms_in : sc.plans) plans.push_back(TransportPlan::from_atoms(cost, sc.grids, atoms_in));
    const auto nu = nonuniqueness_probe(cost, sc.grids, plans, sc.tol);
    json audits = json::array();
    for (const auto& a : nu.plans) {
      audits.push_back({{"feasible", a.feasible},
                        {"optimal", a.optimal},
                        {"objective", num(a.objective)},
                        {"max_marginal_error", num(a.max_marginal_error)},
                        {"issue", a.issue}});
    }
    json identical = json::array();
    for (const auto& [a, b] : nu.identical_pairs) identical.push_back({a, b});
    s["nonuniqueness"] = {{"optimum", num(nu.optimum)},
                          {"plans", audits},
                          {"tv", mat(nu.tv)},
                          {"identical_pairs", identical},
                          {"non_unique", nu.non_unique}};
    if (cfg.expect.non_unique) {
      checks.push_back({"expect.non_unique",
                        nu.non_unique == *cfg.expect.non_unique,
                        {{"expected", *cfg.expect.non_unique}, {"actual", nu.non_unique}}});
    }
  }
  if (cfg.expect.objective) {
    const double want = *cfg.expect.objective;
    const double got = solution.plan.objective;
    const bool ok = std::abs(want - got) <= 1e-8 * std::max(1.0, std::abs(want));
    checks.push_back({"expect.objective", ok, {{"expected", num(want)}, {"actual", num(got)}}});
  }
  return s;
}

void check_section(const RunConfig& cfg, json& out, std::vector<CheckOutcome>& checks) {
  const CostSpec& cost = *cfg.cost;
  if (!cfg.support.empty() && (cfg.checks.monotonicity || cfg.checks.projection)) {
    const SupportSet support(cfg.support);
    if (cfg.checks.monotonicity) {
      const double tol = default_violation_tol(cost, support);
      json reports = json::array();
      std::size_t violations = 0;
      for (const auto& p : enumerate_partitions(cost.marginals())) {
        const auto m = c_monotone_violations(cost, support, p, tol);
        violations += m.violations.size();
        reports.push_back(monotonicity_json(m));
      }
      out["monotonicity"] = {{"tolerance", num(tol)}, {"partitions", reports}};
      checks.push_back({"check.c_monotone", violations == 0, {{"violations", violations}}});
    }
    if (cfg.checks.projection) {
      if (!all_one_dimensional(cost)) throw InputError("projection check needs one-dimensional marginals");
      out["projection"] = projection_json(support, checks, "check.", cost.marginals());
    }
  }
  if (cfg.checks.compatibility) {
    if (!all_one_dimensional(cost)) throw InputError("compatibility check needs one-dimensional marginals");
    const auto cr = compatibility_check(cost, *cfg.checks.box, cfg.checks.samples, cfg.checks.seed);
    json signs = json::array();
    for (int a = 0; a < cr.signs.rows(); ++a) {
      json row = json::array();
      for (int b = 0; b < cr.signs.cols(); ++b) row.push_back(cr.signs(a, b));
      signs.push_back(row);
    }
    json failing = json::array();
    for (const auto& t : cr.failing_triples) failing.push_back({t[0] + 1, t[1] + 1, t[2] + 1});
    out["compatibility"] = {{"conclusive", cr.conclusive}, {"compatible", cr.compatible},   {"signs", signs},
                            {"failing_triples", failing},  {"samples", cfg.checks.samples}, {"seed", cfg.checks.seed}};
    if (cr.offending_pair) {
      out["compatibility"]["offending_pair"] = {cr.offending_pair->first + 1, cr.offending_pair->second + 1};
    }
    if (cfg.expect.compatible) {
      checks.push_back(
          {"expect.compatible",
           cr.conclusive && cr.compatible == *cfg.expect.compatible,
           {{"expected", *cfg.expect.compatible}, {"actual", cr.compatible}, {"conclusive", cr.conclusive}}});
    }
  }
}

void add_point_checks(const RunConfig& cfg, const std::vector<PointAnalysis>& points,
                      std::vector<CheckOutcome>& checks) {
  auto collect = [&](const char* name, auto&& pick) {
    bool any = false;
    bool ok = true;
    json failing = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::optional<bool> v = pick(points[k]);
      if (!v) continue;
      any = true;
      if (!*v) {
        ok = false;
        failing.push_back(k);
      }
    }
    if (any) checks.push_back({name, ok, {{"failing_points", failing}}});
  };
  if (cfg.checks.rank_bound)
    collect("analyze.rank_bound", [](const PointAnalysis& p) { return std::optional<bool>(p.rank_ok); });
  collect("analyze.shortcut_agrees", [](const PointAnalysis& p) { return p.shortcut_agrees; });
  collect("analyze.recursion_agrees", [](const PointAnalysis& p) { return p.recursion_agrees; });
  collect("analyze.bipartite_agrees", [](const PointAnalysis& p) { return p.bipartite_agrees; });
  if (cfg.expect.signature) {
    const auto want = *cfg.expect.signature;
    collect("expect.signature", [&](const PointAnalysis& p) {
      return std::optional<bool>(p.direct.q_plus == want[0] && p.direct.q_minus == want[1] &&
                                 p.direct.q_zero == want[2]);
    });
  }
  if (cfg.expect.necessary_condition_all_pass) {
    const bool want = *cfg.expect.necessary_condition_all_pass;
    collect("expect.necessary_condition_all_pass", [&](const PointAnalysis& p) {
      return p.necessary_all_pass ? std::optional<bool>(*p.necessary_all_pass == want) : std::optional<bool>(false);
    });
  }
}

std::string csv_field(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

bool RunResult::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string config_hash(const json& document) {
  const std::string text = document.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

RunResult run(const RunConfig& cfg, const RunOptions& options) {
  if (!cfg.cost || !cfg.weights) throw InputError("run: configuration has no cost");
  RunResult result;
  json& report = result.report;
  report["version"] = kToolVersion;
  report["config_version"] = kConfigVersion;
  report["config_hash"] = config_hash(cfg.document);
  report["timestamp"] = options.timestamp.empty() ? utc_now() : options.timestamp;
  report["cost"] = {{"name", cfg.cost->name()}, {"dims", cfg.cost->dims()}, {"weights", cfg.weights_mode}};
  report["points"] = json::array();
  report["solves"] = json::array();
  report["checks"] = json::array();

  if ((options.sections & analyze) && !cfg.points.empty()) {
    const auto points = analyze_points(cfg, options.threads);
    for (const auto& p : points) report["points"].push_back(p.report);
    add_point_checks(cfg, points, result.checks);
  }
  if ((options.sections & solve) && cfg.solver) {
    report["solves"].push_back(solve_section(cfg, result.checks));
  }
  json extra = json::object();
  if (options.sections & check) check_section(cfg, extra, result.checks);
  if (!extra.empty()) report["check_details"] = extra;

  for (const auto& c : result.checks) {
    report["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  report["all_passed"] = result.all_passed();
  result.exit_code = (cfg.assert_mode && !result.all_passed()) ? 2 : 0;
  return result;
}

void write_report(std::ostream& out, const RunResult& result, const std::string& format, unsigned sections) {
  const json& r = result.report;
  if (format == "json") {
    out << r.dump(2) << '\n';
    return;
  }
  if (format != "csv") throw InputError("unknown report format '" + format + "'");
  if (sections == analyze) {
    out << "index,q_plus,q_minus,q_zero,dimension_bound,graph_dimension_bound,max_rank,shortcut_agrees,"
           "recursion_agrees\n";
    for (const auto& p : r["points"]) {
      const auto& s = p["signature"];
      out << p["index"] << ',' << s["q_plus"] << ',' << s["q_minus"] << ',' << s["q_zero"] << ','
          << p["dimension_bound"] << ',' << p["graph_dimension_bound"] << ','
          << (p.contains("rank_bounds") ? csv_field(p["rank_bounds"]["max_rank"]) : "") << ','
          << (p.contains("shortcut") && p["shortcut"].contains("agrees") ? csv_field(p["shortcut"]["agrees"]) : "")
          << ',' << (p.contains("recursion") ? csv_field(p["recursion"]["agrees"]) : "") << '\n';
    }
    return;
  }
  if (sections == solve) {
    out << "solve,objective,dual_value,gap,optimal,support_size,spacelike_score,graph_inequality\n";
    std::size_t k = 0;
    for (const auto& s : r["solves"]) {
      out << k++ << ',' << csv_field(s["objective"]) << ',' << csv_field(s["dual_value"]) << ',' << csv_field(s["gap"])
          << ',' << csv_field(s["certificate"]["optimal"]) << ',' << s["support_size"] << ','
          << csv_field(s["spacelike_score"]["value"]) << ',' << csv_field(s["graph_inequality"]["raw"]) << '\n';
    }
    return;
  }
  out << "check,passed\n";
  for (const auto& c : r["checks"]) out << csv_field(c["name"]) << ',' << csv_field(c["passed"]) << '\n';
}

void write_report_file(const std::string& path, const RunResult& result, const std::string& format, unsigned sections) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + tmp + "' for writing");
    write_report(out, result, format, sections);
    out.flush();
    if (!out) throw InputError("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw InputError("cannot rename report into '" + path + "'");
  }
}

}  // namespace mmot
