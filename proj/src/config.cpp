#include "mmot/config.hpp"

#include <cmath>
#include <sstream>

namespace mmot {

using nlohmann::json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::ostringstream out;
  out << "invalid configuration:";
  for (const auto& e : errors) out << "\n  " << e;
  return out.str();
}

// Collects schema violations with JSON-pointer paths instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      error(path, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      error(path, "number must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<int> integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
      error(path, "expected an integer");
      return std::nullopt;
    }
    return j.get<int>();
  }

  std::optional<bool> boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      error(path, "expected true or false");
      return std::nullopt;
    }
    return j.get<bool>();
  }

  std::optional<Vector> vector(const json& j, const std::string& path) {
    if (!j.is_array()) {
      error(path, "expected an array of numbers");
      return std::nullopt;
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    bool ok = true;
    for (std::size_t k = 0; k < j.size(); ++k) {
      auto x = number(j[k], path + "/" + std::to_string(k));
      if (x) {
        v(static_cast<Eigen::Index>(k)) = *x;
      } else {
        ok = false;
      }
    }
    return ok ? std::optional<Vector>(v) : std::nullopt;
  }

  std::optional<Matrix> matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
      error(path, "expected a nonempty array of rows");
      return std::nullopt;
    }
    const auto rows = j.size();
    const auto cols = j[0].size();
    Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    bool ok = true;
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = vector(j[r], path + "/" + std::to_string(r));
      if (!row) {
        ok = false;
        continue;
      }
      if (static_cast<std::size_t>(row->size()) != cols) {
        error(path + "/" + std::to_string(r), "ragged matrix row");
        ok = false;
        continue;
      }
      M.row(static_cast<Eigen::Index>(r)) = row->transpose();
    }
    return ok ? std::optional<Matrix>(M) : std::nullopt;
  }

  std::optional<Point> point(const json& j, const std::string& path) {
    if (!j.is_array()) {
      error(path, "expected a point: an array with one coordinate array per marginal");
      return std::nullopt;
    }
    Point p;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = vector(j[i], path + "/" + std::to_string(i));
      if (v) {
        p.push_back(*v);
      } else {
        ok = false;
      }
    }
    return ok ? std::optional<Point>(p) : std::nullopt;
  }

  void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) return;
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) error(path + "/" + key, "unknown key");
    }
  }
};

std::optional<CostSpec> read_cost(Reader& r, const json& c) {
  const std::string path = "/cost";
  if (!c.is_object()) {
    r.error(path, "expected an object");
    return std::nullopt;
  }
  r.check_keys(c, path, {"kind", "name", "m", "n", "dims", "params", "affine"});
  const std::string kind = c.value("kind", std::string("builtin"));
  const std::size_t before = r.errors.size();

  std::optional<int> m;
  if (c.contains("m")) m = r.integer(c["m"], path + "/m");
  if (m && *m < 2) r.error(path + "/m", "need at least 2 marginals");
  std::optional<std::vector<int>> dims;
  if (c.contains("dims")) {
    if (!c["dims"].is_array()) {
      r.error(path + "/dims", "expected an array of positive integers");
    } else {
      dims.emplace();
      for (std::size_t k = 0; k < c["dims"].size(); ++k) {
        auto d = r.integer(c["dims"][k], path + "/dims/" + std::to_string(k));
        if (d && *d < 1) r.error(path + "/dims/" + std::to_string(k), "dimension must be positive");
        dims->push_back(d.value_or(1));
      }
      if (m && static_cast<int>(dims->size()) != *m) r.error(path + "/dims", "length differs from m");
    }
  }
  const json params = c.value("params", json::object());
  if (!params.is_object()) r.error(path + "/params", "expected an object");
  const std::string ppath = path + "/params";

  std::optional<CostSpec> cost;
  auto build = [&](auto&& make) {
    if (r.errors.size() != before) return;
    try {
      cost = make();
    } catch (const InputError& e) {
      r.error(path, e.what());
    }
  };

  if (kind == "builtin") {
    if (!c.contains("name") || !c["name"].is_string()) {
      r.error(path + "/name", "expected a builtin name");
      return std::nullopt;
    }
    const std::string name = c["name"].get<std::string>();
    if (name == "sum_function") {
      r.check_keys(params, ppath, {"Q", "b", "offset"});
      if (!m) r.error(path + "/m", "sum_function requires m");
      std::optional<Matrix> Q;
      if (!params.contains("Q")) {
        r.error(ppath + "/Q", "missing");
      } else {
        Q = r.matrix(params["Q"], ppath + "/Q");
      }
      std::optional<Vector> b = Vector();
      if (params.contains("b")) b = r.vector(params["b"], ppath + "/b");
      std::optional<double> offset = 0.0;
      if (params.contains("offset")) offset = r.number(params["offset"], ppath + "/offset");
      if (Q && dims) {
        for (int d : *dims) {
          if (d != Q->rows()) r.error(path + "/dims", "sum_function needs every dimension equal to the size of Q");
        }
      }
      build([&] { return CostSpec::sum_function(*m, *Q, *b, *offset); });
    } else if (name == "bilinear") {
      r.check_keys(params, ppath, {"coefficients"});
      if (!params.contains("coefficients")) r.error(ppath + "/coefficients", "missing");
      std::optional<Matrix> A;
      if (params.contains("coefficients")) A = r.matrix(params["coefficients"], ppath + "/coefficients");
      if (!dims) {
        const int n = c.contains("n") ? r.integer(c["n"], path + "/n").value_or(1) : 1;
        const int count = m ? *m : (A ? static_cast<int>(A->rows()) : 0);
        dims = std::vector<int>(static_cast<std::size_t>(std::max(count, 0)), n);
      }
      if (A && static_cast<std::size_t>(A->rows()) != dims->size()) {
        r.error(ppath + "/coefficients", "must be an m x m matrix");
      }
      build([&] { return CostSpec::bilinear(*dims, *A); });
    } else if (name == "neg_determinant") {
      r.check_keys(params, ppath, {});
      std::optional<int> n;
      if (c.contains("n")) n = r.integer(c["n"], path + "/n");
      if (!n) n = m;
      if (!n) {
        r.error(path + "/n", "neg_determinant requires n (= m)");
      } else if (m && *m != *n) {
        r.error(path,
                "neg_determinant requires m = n (got m=" + std::to_string(*m) + ", n=" + std::to_string(*n) + ")");
      } else if (dims) {
        for (int d : *dims) {
          if (d != *n) r.error(path + "/dims", "neg_determinant requires every dimension equal to m");
        }
      }
      build([&] { return CostSpec::neg_determinant(*n); });
    } else if (name == "hedonic") {
      r.check_keys(params, ppath, {"P"});
      std::vector<Matrix> P;
      if (!params.contains("P") || !params["P"].is_array()) {
        r.error(ppath + "/P", "expected an array of matrices");
      } else {
        for (std::size_t k = 0; k < params["P"].size(); ++k) {
          auto Pk = r.matrix(params["P"][k], ppath + "/P/" + std::to_string(k));
          if (Pk) P.push_back(*Pk);
        }
        if (m && static_cast<int>(params["P"].size()) != *m) r.error(ppath + "/P", "need one matrix per marginal");
      }
      build([&] { return CostSpec::hedonic(P); });
    } else {
      r.error(path + "/name", "unknown builtin '" + name + "'");
      return std::nullopt;
    }
  } else if (kind == "tabulated") {
    r.check_keys(params, ppath, {"axes", "values"});
    if (!dims) r.error(path + "/dims", "tabulated costs require dims");
    std::vector<std::vector<double>> axes;
    std::vector<double> values;
    if (!params.contains("axes") || !params["axes"].is_array()) {
      r.error(ppath + "/axes", "expected an array of axes");
    } else {
      for (std::size_t k = 0; k < params["axes"].size(); ++k) {
        auto a = r.vector(params["axes"][k], ppath + "/axes/" + std::to_string(k));
        if (a) axes.emplace_back(a->data(), a->data() + a->size());
      }
    }
    if (!params.contains("values")) {
      r.error(ppath + "/values", "missing");
    } else if (auto v = r.vector(params["values"], ppath + "/values")) {
      values.assign(v->data(), v->data() + v->size());
    }
    build([&] { return CostSpec::tabulated(*dims, axes, values); });
  } else {
    r.error(path + "/kind", "unknown cost kind '" + kind + "' (expected builtin or tabulated)");
    return std::nullopt;
  }

  if (cost && dims && *dims != cost->dims()) r.error(path + "/dims", "does not match the cost's dimensions");
  if (cost && c.contains("affine")) {
    const auto& a = c["affine"];
    std::vector<Vector> linear;
    bool ok = a.is_object() && a.contains("linear") && a["linear"].is_array();
    if (!ok) r.error(path + "/affine", "expected {\"linear\": [...], \"constant\": c}");
    if (ok) {
      for (std::size_t k = 0; k < a["linear"].size(); ++k) {
        auto v = r.vector(a["linear"][k], path + "/affine/linear/" + std::to_string(k));
        if (v) linear.push_back(*v);
      }
      const double constant =
          a.contains("constant") ? r.number(a["constant"], path + "/affine/constant").value_or(0.0) : 0.0;
      try {
        cost = cost->with_affine_shift(linear, constant);
      } catch (const InputError& e) {
        r.error(path + "/affine", e.what());
      }
    }
  }
  return cost;
}

std::optional<PartitionWeights> read_weights(Reader& r, const json& w, int m, std::string& mode) {
  const std::string path = "/weights";
  try {
    if (w.is_string()) {
      if (w.get<std::string>() != "uniform") {
        r.error(path, "unknown weights mode '" + w.get<std::string>() + "'");
        return std::nullopt;
      }
      mode = "uniform";
      return PartitionWeights::uniform(m);
    }
    if (!w.is_object() || w.size() != 1) {
      r.error(path, "expected \"uniform\" or an object with exactly one of single_partition, explicit");
      return std::nullopt;
    }
    auto group = [&](const json& g, const std::string& gpath) -> std::optional<Bipartition> {
      if (!g.is_array()) {
        r.error(gpath, "expected a list of 1-based marginal indices");
        return std::nullopt;
      }
      std::vector<int> members;
      for (std::size_t k = 0; k < g.size(); ++k) {
        auto i = r.integer(g[k], gpath + "/" + std::to_string(k));
        if (!i) return std::nullopt;
        if (*i < 1 || *i > m) {
          r.error(gpath + "/" + std::to_string(k), "marginal index out of range");
          return std::nullopt;
        }
        members.push_back(*i - 1);
      }
      try {
        return Bipartition::from_group(m, members);
      } catch (const InputError& e) {
        r.error(gpath, e.what());
        return std::nullopt;
      }
    };
    if (w.contains("single_partition")) {
      mode = "single_partition";
      auto p = group(w["single_partition"], path + "/single_partition");
      if (!p) return std::nullopt;
      return PartitionWeights::single(m, *p);
    }
    if (w.contains("explicit")) {
      mode = "explicit";
      const auto& list = w["explicit"];
      if (!list.is_array()) {
        r.error(path + "/explicit", "expected a list of {group, t}");
        return std::nullopt;
      }
      std::vector<std::pair<Bipartition, double>> entries;
      double total = 0.0;
      bool ok = true;
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string epath = path + "/explicit/" + std::to_string(k);
        if (!list[k].is_object() || !list[k].contains("group") || !list[k].contains("t")) {
          r.error(epath, "expected {\"group\": [...], \"t\": number}");
          ok = false;
          continue;
        }
        auto p = group(list[k]["group"], epath + "/group");
        auto t = r.number(list[k]["t"], epath + "/t");
        if (t && (*t < 0.0 || *t > 1.0)) r.error(epath + "/t", "t_p must lie in [0, 1]");
        if (!p || !t) {
          ok = false;
          continue;
        }
        total += *t;
        entries.emplace_back(*p, *t);
      }
      if (ok && std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "weights sum " << total << " ≠ 1";
        r.error(path + "/explicit", msg.str());
        return std::nullopt;
      }
      if (!ok) return std::nullopt;
      return PartitionWeights::from_list(m, entries);
    }
    r.error(path, "expected single_partition or explicit");
  } catch (const InputError& e) {
    r.error(path, e.what());
  }
  return std::nullopt;
}

void read_points(Reader& r, const json& j, RunConfig& cfg) {
  const std::string path = "/points";
  if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      auto p = r.point(j[k], path + "/" + std::to_string(k));
      if (p) cfg.points.push_back(*p);
    }
    return;
  }
  if (j.is_object() && j.contains("sweep")) {
    const auto& s = j["sweep"];
    std::optional<Point> lo;
    if (s.contains("lo")) lo = r.point(s["lo"], path + "/sweep/lo");
    std::optional<Point> hi;
    if (s.contains("hi")) hi = r.point(s["hi"], path + "/sweep/hi");
    std::optional<int> steps;
    if (s.contains("steps")) steps = r.integer(s["steps"], path + "/sweep/steps");
    if (!lo || !hi || !steps) {
      r.error(path + "/sweep", "expected {lo: point, hi: point, steps: integer >= 1}");
      return;
    }
    const Vector a = flatten(*lo);
    const Vector b = flatten(*hi);
    if (a.size() != b.size() || *steps < 1) {
      r.error(path + "/sweep", "lo and hi must have the same shape and steps must be >= 1");
      return;
    }
    std::vector<int> dims;
    for (const auto& v : *lo) dims.push_back(static_cast<int>(v.size()));
    // Product grid over the coordinates where lo != hi.
    std::vector<Eigen::Index> varying;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (a(k) != b(k)) varying.push_back(k);
    }
    const double total = std::pow(static_cast<double>(*steps), static_cast<double>(varying.size()));
    if (total > 10000.0) {
      r.error(path + "/sweep", "sweep would produce more than 10000 points");
      return;
    }
    std::vector<int> counter(varying.size(), 0);
    while (true) {
      Vector y = a;
      for (std::size_t v = 0; v < varying.size(); ++v) {
        const double t = *steps == 1 ? 0.0 : static_cast<double>(counter[v]) / (*steps - 1);
        y(varying[v]) = a(varying[v]) + t * (b(varying[v]) - a(varying[v]));
      }
      cfg.points.push_back(unflatten(dims, y));
      std::size_t v = 0;
      while (v < counter.size() && ++counter[v] == *steps) counter[v++] = 0;
      if (v == counter.size()) break;
    }
    return;
  }
  r.error(path, "expected a list of points or {\"sweep\": ...}");
}

std::optional<MarginalGrid> read_grid(Reader& r, const json& g, const std::string& path) {
  if (g.is_object() && g.contains("uniform")) {
    const auto& u = g["uniform"];
    std::optional<double> lo;
    if (u.contains("lo")) lo = r.number(u["lo"], path + "/uniform/lo");
    std::optional<double> hi;
    if (u.contains("hi")) hi = r.number(u["hi"], path + "/uniform/hi");
    std::optional<int> count;
    if (u.contains("count")) count = r.integer(u["count"], path + "/uniform/count");
    if (!lo || !hi || !count || *count < 1 || !(*lo < *hi || *count == 1)) {
      r.error(path + "/uniform", "expected {lo < hi, count >= 1}");
      return std::nullopt;
    }
    return MarginalGrid::uniform_1d(*lo, *hi, *count);
  }
  if (!g.is_object() || !g.contains("points") || !g.contains("weights") || !g["points"].is_array()) {
    r.error(path, "expected {\"points\": [...], \"weights\": [...]} or {\"uniform\": {...}}");
    return std::nullopt;
  }
  MarginalGrid grid;
  for (std::size_t k = 0; k < g["points"].size(); ++k) {
    const auto& pj = g["points"][k];
    auto v = pj.is_number() ? std::optional<Vector>(Vector::Constant(1, pj.get<double>()))
                            : r.vector(pj, path + "/points/" + std::to_string(k));
    if (v) grid.points.push_back(*v);
  }
  auto w = r.vector(g["weights"], path + "/weights");
  if (w) grid.weights.assign(w->data(), w->data() + w->size());
  return grid;
}

std::optional<SolverConfig> read_solver(Reader& r, const json& s, const std::optional<CostSpec>& cost) {
  const std::string path = "/solver";
  if (!s.is_object()) {
    r.error(path, "expected an object");
    return std::nullopt;
  }
  r.check_keys(s, path, {"grids", "tol", "mass_tol", "radius", "plans"});
  SolverConfig cfg;
  if (!s.contains("grids") || !s["grids"].is_array()) {
    r.error(path + "/grids", "expected one grid per marginal");
  } else {
    for (std::size_t k = 0; k < s["grids"].size(); ++k) {
      auto g = read_grid(r, s["grids"][k], path + "/grids/" + std::to_string(k));
      if (g) cfg.grids.push_back(*g);
    }
    if (cost && static_cast<int>(s["grids"].size()) != cost->marginals()) {
      r.error(path + "/grids", "need one grid per marginal");
    } else if (cost && cfg.grids.size() == s["grids"].size()) {
      for (std::size_t k = 0; k < cfg.grids.size(); ++k) {
        try {
          validate_grid(cfg.grids[k], cost->dim(static_cast<int>(k)));
        } catch (const InputError& e) {
          r.error(path + "/grids/" + std::to_string(k), e.what());
        }
      }
    }
  }
  if (s.contains("tol")) cfg.tol = r.number(s["tol"], path + "/tol").value_or(cfg.tol);
  if (s.contains("mass_tol")) cfg.mass_tol = r.number(s["mass_tol"], path + "/mass_tol").value_or(cfg.mass_tol);
  if (s.contains("radius")) cfg.radius = r.number(s["radius"], path + "/radius").value_or(cfg.radius);
  if (!(cfg.radius > 0.0)) r.error(path + "/radius", "must be positive");
  if (s.contains("plans")) {
    const auto& plans = s["plans"];
    if (!plans.is_array()) r.error(path + "/plans", "expected a list of plans");
    for (std::size_t p = 0; plans.is_array() && p < plans.size(); ++p) {
      const std::string ppath = path + "/plans/" + std::to_string(p);
      if (!plans[p].is_array()) {
        r.error(ppath, "expected a list of {index, mass} atoms");
        continue;
      }
      std::vector<PlanAtom> atoms;
      for (std::size_t a = 0; a < plans[p].size(); ++a) {
        const auto& atom = plans[p][a];
        const std::string apath = ppath + "/" + std::to_string(a);
        if (!atom.is_object() || !atom.contains("index") || !atom.contains("mass") || !atom["index"].is_array()) {
          r.error(apath, "expected {\"index\": [...], \"mass\": number}");
          continue;
        }
        PlanAtom out;
        for (std::size_t k = 0; k < atom["index"].size(); ++k) {
          out.index.push_back(r.integer(atom["index"][k], apath + "/index/" + std::to_string(k)).value_or(0));
        }
        out.mass = r.number(atom["mass"], apath + "/mass").value_or(0.0);
        atoms.push_back(std::move(out));
      }
      cfg.plans.push_back(std::move(atoms));
    }
  }
  return cfg;
}

void read_checks(Reader& r, const json& c, CheckConfig& checks, int m) {
  const std::string path = "/checks";
  if (!c.is_object()) {
    r.error(path, "expected an object");
    return;
  }
  r.check_keys(c, path,
               {"rank_bound", "shortcut", "recursion", "necessary_condition", "frame", "bipartite", "monotonicity",
                "compatibility", "projection", "box", "samples", "seed"});
  auto flag = [&](const char* key, bool& target) {
    if (c.contains(key)) target = r.boolean(c[key], path + "/" + key).value_or(target);
  };
  flag("rank_bound", checks.rank_bound);
  flag("shortcut", checks.shortcut);
  flag("recursion", checks.recursion);
  flag("necessary_condition", checks.necessary_condition);
  flag("frame", checks.frame);
  flag("bipartite", checks.bipartite);
  flag("monotonicity", checks.monotonicity);
  flag("compatibility", checks.compatibility);
  flag("projection", checks.projection);
  if (c.contains("samples")) {
    checks.samples = r.integer(c["samples"], path + "/samples").value_or(checks.samples);
    if (checks.samples < 100) r.error(path + "/samples", "at least 100 samples");
  }
  if (c.contains("seed")) {
    if (!c["seed"].is_number_unsigned() && !c["seed"].is_number_integer()) {
      r.error(path + "/seed", "expected a nonnegative integer");
    } else {
      checks.seed = c["seed"].get<std::uint64_t>();
    }
  }
  if (c.contains("box")) {
    const auto& b = c["box"];
    std::optional<Vector> lo;
    if (b.is_object() && b.contains("lo")) lo = r.vector(b["lo"], path + "/box/lo");
    std::optional<Vector> hi;
    if (b.is_object() && b.contains("hi")) hi = r.vector(b["hi"], path + "/box/hi");
    if (!lo || !hi || lo->size() != m || hi->size() != m) {
      r.error(path + "/box", "expected {lo: [m numbers], hi: [m numbers]}");
    } else {
      checks.box = Box{{lo->data(), lo->data() + lo->size()}, {hi->data(), hi->data() + hi->size()}};
      for (int k = 0; k < m; ++k) {
        if (!(checks.box->lo[static_cast<std::size_t>(k)] < checks.box->hi[static_cast<std::size_t>(k)])) {
          r.error(path + "/box", "lo must be below hi in every coordinate");
        }
      }
    }
  }
  if (checks.compatibility && !checks.box) r.error(path + "/box", "compatibility needs a sampling box");
}

void read_expect(Reader& r, const json& e, Expectation& expect) {
  const std::string path = "/expect";
  if (!e.is_object()) {
    r.error(path, "expected an object");
    return;
  }
  r.check_keys(e, path, {"signature", "objective", "non_unique", "necessary_condition_all_pass", "compatible"});
  if (e.contains("signature")) {
    const auto& s = e["signature"];
    if (!s.is_array() || s.size() != 3) {
      r.error(path + "/signature", "expected [q_plus, q_minus, q_zero]");
    } else {
      std::array<int, 3> sig{};
      for (std::size_t k = 0; k < 3; ++k)
        sig[k] = r.integer(s[k], path + "/signature/" + std::to_string(k)).value_or(-1);
      expect.signature = sig;
    }
  }
  if (e.contains("objective")) expect.objective = r.number(e["objective"], path + "/objective");
  if (e.contains("non_unique")) expect.non_unique = r.boolean(e["non_unique"], path + "/non_unique");
  if (e.contains("necessary_condition_all_pass")) {
    expect.necessary_condition_all_pass =
        r.boolean(e["necessary_condition_all_pass"], path + "/necessary_condition_all_pass");
  }
  if (e.contains("compatible")) expect.compatible = r.boolean(e["compatible"], path + "/compatible");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : InputError(join_errors(errors)), errors_(std::move(errors)) {}

RunConfig parse_config(std::string_view text) {
  json document;
  try {
    document = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("/: ") + e.what()});
  }
  return parse_config(document);
}

RunConfig parse_config(const json& document) {
  Reader r;
  RunConfig cfg;
  cfg.document = document;
  if (!document.is_object()) throw ConfigError({"/: expected a JSON object"});
  r.check_keys(document, "",
               {"version", "description", "cost", "weights", "points", "support", "solver", "checks", "expect",
                "zero_tol", "output", "assert"});

  if (!document.contains("version")) {
    r.error("/version", "missing");
  } else if (auto v = r.integer(document["version"], "/version"); v && *v != kConfigVersion) {
    r.error("/version", "unsupported version " + std::to_string(*v));
  }

  if (!document.contains("cost")) {
    r.error("/cost", "missing");
  } else {
    cfg.cost = read_cost(r, document["cost"]);
  }
  const int m = cfg.cost ? cfg.cost->marginals() : 0;

  if (cfg.cost) {
    cfg.weights = read_weights(r, document.value("weights", json("uniform")), m, cfg.weights_mode);
  }

  if (document.contains("points")) read_points(r, document["points"], cfg);
  if (document.contains("support")) {
    const auto& s = document["support"];
    if (!s.is_array()) r.error("/support", "expected a list of points");
    for (std::size_t k = 0; s.is_array() && k < s.size(); ++k) {
      auto p = r.point(s[k], "/support/" + std::to_string(k));
      if (p) cfg.support.push_back(*p);
    }
  }
  if (cfg.cost) {
    auto validate = [&](const std::vector<Point>& pts, const std::string& base) {
      for (std::size_t k = 0; k < pts.size(); ++k) {
        try {
          check_point(*cfg.cost, pts[k]);
        } catch (const InputError& e) {
          r.error(base + "/" + std::to_string(k), e.what());
        }
      }
    };
    validate(cfg.points, "/points");
    validate(cfg.support, "/support");
  }

  if (document.contains("solver")) cfg.solver = read_solver(r, document["solver"], cfg.cost);
  if (document.contains("checks")) read_checks(r, document["checks"], cfg.checks, m);
  if (document.contains("expect")) read_expect(r, document["expect"], cfg.expect);
  if (document.contains("zero_tol")) {
    cfg.zero_tol = r.number(document["zero_tol"], "/zero_tol");
    if (cfg.zero_tol && *cfg.zero_tol < 0.0) r.error("/zero_tol", "must be nonnegative");
  }
  if (document.contains("output")) {
    const auto& o = document["output"];
    r.check_keys(o, "/output", {"path", "format"});
    if (!o.is_object()) {
      r.error("/output", "expected an object");
    } else {
      if (o.contains("path")) {
        if (o["path"].is_string()) {
          cfg.output_path = o["path"].get<std::string>();
        } else {
          r.error("/output/path", "expected a string");
        }
      }
      if (o.contains("format")) {
        const std::string f = o["format"].is_string() ? o["format"].get<std::string>() : "";
        if (f != "json" && f != "csv") r.error("/output/format", "expected json or csv");
        cfg.output_format = f;
      }
    }
  }
  if (document.contains("assert")) cfg.assert_mode = r.boolean(document["assert"], "/assert").value_or(false);

  if (!r.errors.empty()) throw ConfigError(r.errors);
  return cfg;
}

CostSpec parse_cost(const json& cost) {
  Reader r;
  auto spec = read_cost(r, cost);
  if (!r.errors.empty() || !spec)
    throw ConfigError(r.errors.empty() ? std::vector<std::string>{"/cost: invalid"} : r.errors);
  return *spec;
}

}  // namespace mmot
