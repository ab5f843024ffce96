#include "mmot/presets.hpp"

#include "mmot/errors.hpp"

namespace mmot {

using nlohmann::json;

namespace {

json uniform_grid(double lo, double hi, int count) {
  return {{"uniform", {{"lo", lo}, {"hi", hi}, {"count", count}}}};
}

json grids(int m, double lo, double hi, int count) {
  json out = json::array();
  for (int i = 0; i < m; ++i) out.push_back(uniform_grid(lo, hi, count));
  return out;
}

json atom(std::vector<int> index, double mass) {
  return {{"index", index}, {"mass", mass}};
}

// gamma_1 on y = 1 - w, z = 1 - x and gamma_2 on y = 1 - x, z = 1 - w over k-point grids of [0, 1].
json nonuniqueness_plans(int k) {
  json first = json::array();
  json second = json::array();
  const double mass = 1.0 / (k * k);
  for (int a = 0; a < k; ++a) {
    for (int d = 0; d < k; ++d) {
      first.push_back(atom({a, k - 1 - d, k - 1 - a, d}, mass));
      second.push_back(atom({a, k - 1 - a, k - 1 - d, d}, mass));
    }
  }
  return {first, second};
}

std::vector<Preset> build() {
  std::vector<Preset> out;

  out.push_back(
      {"concave_sum",
       "h(sum x_i) with D^2h negative definite, m=3, n=2: signature ((m-1)n, n, 0)",
       {{"version", 1},
        {"cost",
         {{"kind", "builtin"}, {"name", "sum_function"}, {"m", 3}, {"params", {{"Q", {{-2.0, 0.5}, {0.5, -1.0}}}}}}},
        {"weights", "uniform"},
        {"points", {{{0.1, 0.2}, {0.3, -0.4}, {0.5, 0.6}}, {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 2.0}}}},
        {"checks", {{"shortcut", true}, {"recursion", true}, {"necessary_condition", true}, {"frame", true}}},
        {"expect", {{"signature", {4, 2, 0}}, {"necessary_condition_all_pass", true}}}}});

  out.push_back({"convex_sum_surface",
                 "(sum x_i - 2)^2, m=4, n=1: signature (n, n(m-1), 0); the surface sum x_i = 2 is optimal",
                 {{"version", 1},
                  {"cost",
                   {{"kind", "builtin"},
                    {"name", "sum_function"},
                    {"m", 4},
                    {"params", {{"Q", {{2.0}}}, {"b", {-4.0}}, {"offset", 4.0}}}}},
                  {"weights", "uniform"},
                  {"points", {{{0.25}, {0.75}, {0.5}, {0.5}}}},
                  {"solver", {{"grids", grids(4, 0.0, 1.0, 5)}, {"radius", 0.6}}},
                  {"checks", {{"recursion", true}, {"frame", true}}},
                  {"expect", {{"signature", {1, 3, 0}}, {"objective", 0.0}}}}});

  out.push_back(
      {"indefinite_sum",
       "h(sum x_i) with D^2h of signature (1,1,0), m=3, n=2: signature (3, 3, 0)",
       {{"version", 1},
        {"cost",
         {{"kind", "builtin"}, {"name", "sum_function"}, {"m", 3}, {"params", {{"Q", {{1.0, 0.0}, {0.0, -1.0}}}}}}},
        {"weights", "uniform"},
        {"points", {{{0.0, 0.0}, {0.5, 0.5}, {1.0, -1.0}}}},
        {"checks", {{"shortcut", true}, {"recursion", true}}},
        {"expect", {{"signature", {3, 3, 0}}}}}});

  out.push_back(
      {"hedonic_identity",
       "hedonic cost with P_i = I, m=3, n=2: cross blocks -I/3, signature (4, 2, 0)",
       {{"version", 1},
        {"cost",
         {{"kind", "builtin"},
          {"name", "hedonic"},
          {"m", 3},
          {"params", {{"P", {{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {0.0, 1.0}}}}}}}},
        {"weights", "uniform"},
        {"points", {{{0.0, 0.0}, {1.0, 0.0}, {0.0, 3.0}}}},
        {"checks", {{"shortcut", true}, {"recursion", true}, {"necessary_condition", true}}},
        {"expect", {{"signature", {4, 2, 0}}, {"necessary_condition_all_pass", true}}}}});

  out.push_back({"neg_determinant_diagonal",
                 "minus determinant, m=n=3, at x_i = r e_i: signature (5, 4, 0)",
                 {{"version", 1},
                  {"cost", {{"kind", "builtin"}, {"name", "neg_determinant"}, {"m", 3}, {"n", 3}}},
                  {"weights", "uniform"},
                  {"points",
                   {{{0.5, 0.0, 0.0}, {0.0, 0.5, 0.0}, {0.0, 0.0, 0.5}},
                    {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}},
                    {{2.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 2.0}}}},
                  {"checks", {{"recursion", true}, {"necessary_condition", true}}},
                  {"expect", {{"signature", {5, 4, 0}}}}}});

  out.push_back({"surface_nonunique",
                 "(sum x_i - 2)^2, m=4, n=1 on 8-point grids: two distinct optimal plans",
                 {{"version", 1},
                  {"cost",
                   {{"kind", "builtin"},
                    {"name", "sum_function"},
                    {"m", 4},
                    {"params", {{"Q", {{2.0}}}, {"b", {-4.0}}, {"offset", 4.0}}}}},
                  {"weights", "uniform"},
                  {"solver", {{"grids", grids(4, 0.0, 1.0, 8)}, {"plans", nonuniqueness_plans(8)}}},
                  {"expect", {{"objective", 0.0}, {"non_unique", true}}}}});

  out.push_back(
      {"triple_condition_counterexample",
       "-x1x2 - x1x3 - x1x4 - x2x3 - x2x4 - 5x3x4: signature (2, 2, 0) although every threefold "
       "product condition holds",
       {{"version", 1},
        {"cost",
         {{"kind", "builtin"},
          {"name", "bilinear"},
          {"m", 4},
          {"n", 1},
          {"params",
           {{"coefficients",
             {{0.0, -1.0, -1.0, -1.0}, {-1.0, 0.0, -1.0, -1.0}, {-1.0, -1.0, 0.0, -5.0}, {-1.0, -1.0, -5.0, 0.0}}}}}}},
        {"weights", "uniform"},
        {"points", {{{0.3}, {0.1}, {0.7}, {0.2}}}},
        {"checks",
         {{"recursion", true},
          {"necessary_condition", true},
          {"compatibility", true},
          {"box", {{"lo", {0.0, 0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0, 1.0}}}}}},
        {"expect", {{"signature", {2, 2, 0}}, {"necessary_condition_all_pass", true}, {"compatible", true}}}}});

  out.push_back(
      {"rank_deficient_pair",
       "two marginals, n=2, cross block of rank 1: signature (r, r, n1+n2-2r) = (1, 1, 2)",
       {{"version", 1},
        {"cost",
         {{"kind", "builtin"}, {"name", "sum_function"}, {"m", 2}, {"params", {{"Q", {{1.0, 0.0}, {0.0, 0.0}}}}}}},
        {"weights", "uniform"},
        {"points", {{{0.2, -0.3}, {1.0, 0.4}}}},
        {"checks", {{"bipartite", true}}},
        {"expect", {{"signature", {1, 1, 2}}}}}});

  out.push_back({"two_marginal_comonotone",
                 "-x1x2 on 3-point grids: comonotone coupling, objective -5/12",
                 {{"version", 1},
                  {"cost",
                   {{"kind", "builtin"},
                    {"name", "bilinear"},
                    {"m", 2},
                    {"n", 1},
                    {"params", {{"coefficients", {{0.0, -1.0}, {-1.0, 0.0}}}}}}},
                  {"weights", "uniform"},
                  {"points", {{{0.5}, {0.5}}}},
                  {"solver", {{"grids", grids(2, 0.0, 1.0, 3)}, {"radius", 0.8}}},
                  {"checks", {{"bipartite", true}, {"projection", true}}},
                  {"expect", {{"signature", {1, 1, 0}}, {"objective", -5.0 / 12.0}}}}});

  out.push_back({"monotone_projections",
                 "-x1x2 - x1x3 - x2x3 on 5-point grids: compatible signs and monotone projections of the optimizer",
                 {{"version", 1},
                  {"cost",
                   {{"kind", "builtin"},
                    {"name", "bilinear"},
                    {"m", 3},
                    {"n", 1},
                    {"params", {{"coefficients", {{0.0, -1.0, -1.0}, {-1.0, 0.0, -1.0}, {-1.0, -1.0, 0.0}}}}}}},
                  {"weights", "uniform"},
                  {"points", {{{0.5}, {0.5}, {0.5}}}},
                  {"solver", {{"grids", grids(3, 0.0, 1.0, 5)}}},
                  {"checks",
                   {{"shortcut", true},
                    {"compatibility", true},
                    {"projection", true},
                    {"box", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0}}}}}},
                  {"expect", {{"signature", {2, 1, 0}}, {"compatible", true}}}}});

  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw InputError("unknown preset '" + name + "'");
}

}  // namespace mmot
