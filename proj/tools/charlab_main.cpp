// charlab: load .cdl definitions, run character-sum experiments over prime
// ranges, and emit CSV/JSON reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "charlab/charsums.hpp"
#include "charlab/equidist.hpp"
#include "charlab/measure.hpp"
#include "charlab/parse.hpp"
#include "charlab/print.hpp"
#include "charlab/util.hpp"

using json = nlohmann::ordered_json;
using namespace charlab;

namespace {

// -------- deterministic formatting ------------------------------------------

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json jnum(double v) {
  // round floats through the fixed formatter so reports are byte-identical
  // across runs
  return json::parse(fmt(v));
}

// -------- input plumbing -----------------------------------------------------

Definitions load_defs(const std::vector<std::string>& paths) {
  std::string all;
  for (auto& path : paths) {
    std::ifstream in(path);
    if (!in.good()) throw Error("cannot open definition file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    all += ss.str();
    all += "\n";
  }
  return parse_source(all);
}

std::vector<long long> parse_primes(const std::string& s) {
  auto dots = s.find("..");
  if (dots != std::string::npos) {
    long long lo = std::stoll(s.substr(0, dots));
    long long hi = std::stoll(s.substr(dots + 2));
    if (lo > hi) throw Error("prime range bounds out of order");
    return primes_in_range(lo, hi);
  }
  std::vector<long long> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long long p = std::stoll(item);
    if (!is_prime_u64((std::uint64_t)p)) throw NotPrimeError(p);
    out.push_back(p);
  }
  return out;
}

// "p^e,p^e,..." or plain primes
std::vector<std::pair<long long, int>> parse_q_list(const std::string& s) {
  std::vector<std::pair<long long, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto caret = item.find('^');
    long long p = std::stoll(item.substr(0, caret));
    int e = caret == std::string::npos ? 1 : std::stoi(item.substr(caret + 1));
    out.emplace_back(p, e);
  }
  return out;
}

struct CharFlags {
  long long psi_c = 1;
  std::string chi = "1";  // integer index or "quadratic"
  ChiRule chi_rule() const {
    if (chi == "quadratic") return ChiRule::quadratic();
    return ChiRule::index(std::stoll(chi));
  }
  PsiRule psi_rule() const { return PsiRule{psi_c}; }
};

std::uint64_t budget_from_env(std::uint64_t cli_value) {
  if (const char* env = std::getenv("CHARLAB_BUDGET")) {
    return (std::uint64_t)std::stoull(env);
  }
  return cli_value;
}

// pad a polynomial to a fixed arity
PolyExpr pad_poly(const PolyExpr& p, int arity) {
  PolyExpr out;
  out.arity = arity;
  for (auto& [e, c] : p.terms) {
    ExpVec v(e);
    if ((int)v.size() > arity)
      throw ArityMismatchError("polynomial arity exceeds the ambient dimension");
    v.resize(arity, 0);
    out.terms[v] = c;
  }
  return out;
}

// curve selection: explicit ids, or every poly id >= first_curve_id
AffineVariety select_curve(const Definitions& defs, const std::string& ids,
                           int ambient, int first_curve_id) {
  AffineVariety V;
  V.ambient_dim = ambient;
  std::vector<int> chosen;
  if (ids == "auto") {
    for (auto& [id, p] : defs.polys)
      if (id >= first_curve_id) chosen.push_back(id);
  } else if (!ids.empty() && ids != "none") {
    std::stringstream ss(ids);
    std::string item;
    while (std::getline(ss, item, ',')) chosen.push_back(std::stoi(item));
  }
  for (int id : chosen) {
    auto it = defs.polys.find(id);
    if (it == defs.polys.end()) throw UnresolvedReferenceError("poly", id);
    V.equations.push_back(pad_poly(it->second, ambient));
  }
  return V;
}

// -------- output plumbing ------------------------------------------------------

void write_file(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw Error("cannot open output file: " + path);
  out << content;
}

// --assert mode: every key names a summary value; {"value": v, "tol": t}
int check_assertions(const std::string& assert_path,
                     const std::map<std::string, double>& summary) {
  std::ifstream in(assert_path);
  if (!in.good()) throw Error("cannot open expectation file: " + assert_path);
  json expected = json::parse(in);
  int failures = 0;
  for (auto& [key, entry] : expected.items()) {
    auto it = summary.find(key);
    if (it == summary.end()) {
      std::cerr << "assert: unknown summary key '" << key << "'\n";
      ++failures;
      continue;
    }
    double want = entry.at("value").get<double>();
    double tol = entry.value("tol", 0.0);
    if (std::abs(it->second - want) > tol) {
      std::cerr << "assert: " << key << " = " << fmt(it->second)
                << " deviates from " << fmt(want) << " (tol " << fmt(tol)
                << ")\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

std::string flags_str(const CharSumReport& r) {
  std::string s;
  if (r.psi_constant_on_points) s += "psi_const";
  if (r.chi_constant_on_points) s += s.empty() ? "chi_const" : ";chi_const";
  return s.empty() ? "-" : s;
}

// -------- subcommand implementations ---------------------------------------------

struct CommonOpts {
  std::vector<std::string> defs;
  std::string out;
  std::string assert_file;
  std::uint64_t budget = 100000000ull;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_defs = true) {
  if (needs_defs)
    cmd->add_option("--def", o.defs, "definition file(s) (.cdl)")->required();
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--assert", o.assert_file,
                  "expectation file; exit 1 on deviation");
  cmd->add_option("--budget", o.budget, "enumeration budget");
  cmd->add_option("--jobs", o.jobs, "parallel workers for per-prime scans");
}

int run_weil_scan_like(const CommonOpts& common, const CharFlags& chars,
                       const std::string& primes_spec, const std::string& q_spec,
                       const std::string& curve_ids, int g_id, int h_id,
                       bool single) {
  Definitions defs = load_defs(common.defs);
  auto git = defs.polys.find(g_id);
  auto hit = defs.polys.find(h_id);
  if (git == defs.polys.end()) throw UnresolvedReferenceError("poly", g_id);
  if (hit == defs.polys.end()) throw UnresolvedReferenceError("poly", h_id);

  std::vector<std::pair<long long, int>> fields;
  if (!q_spec.empty()) fields = parse_q_list(q_spec);
  else
    for (long long p : parse_primes(primes_spec)) fields.emplace_back(p, 1);
  if (single && fields.size() != 1)
    throw Error("sum expects exactly one field (--q p^e or --primes p)");

  int ambient = std::max(git->second.arity, hit->second.arity);
  AffineVariety C = select_curve(defs, curve_ids, ambient, std::max(g_id, h_id) + 1);
  for (auto& eq : C.equations) ambient = std::max(ambient, eq.arity);
  PolyExpr g = pad_poly(git->second, ambient);
  PolyExpr h = pad_poly(hit->second, ambient);
  C.ambient_dim = ambient;

  std::uint64_t budget = budget_from_env(common.budget);
  std::ostringstream csv;
  csv << "q,re,im,abs,normalized,flags,pass\n";
  WeilScanResult res;
  try {
    res = weil_scan(C, g, h, fields, chars.psi_rule(), chars.chi_rule(), budget,
                    common.jobs);
  } catch (const Error& e) {
    // flush whatever completed with the partial marker
    csv << "# schema: 1\n# partial: true\n";
    write_file(common.out, csv.str());
    throw;
  }
  for (auto& row : res.rows) {
    csv << row.report.q << "," << fmt(row.report.sum.real()) << ","
        << fmt(row.report.sum.imag()) << "," << fmt(row.report.abs) << ","
        << fmt(row.report.normalized) << "," << flags_str(row.report) << ","
        << (row.included ? "1" : "0") << "\n";
  }
  csv << "# schema: 1\n";
  csv << "# max_normalized: " << fmt(res.max_normalized) << "\n";
  write_file(common.out, csv.str());

  std::map<std::string, double> summary{{"max_normalized", res.max_normalized}};
  if (!res.rows.empty()) {
    summary["first_abs"] = res.rows.front().report.abs;
    summary["first_normalized"] = res.rows.front().report.normalized;
  }
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_axiom4(const CommonOpts& common, const CharFlags& chars,
               const std::string& primes_spec, const std::string& q_spec,
               const std::string& curve_ids, int laurent_id, double k_suite) {
  Definitions defs = load_defs(common.defs);
  auto it = defs.laurents.find(laurent_id);
  if (it == defs.laurents.end())
    throw UnresolvedReferenceError("laurent", laurent_id);
  const LaurentPoly& h = it->second;

  std::vector<std::pair<long long, int>> fields;
  if (!q_spec.empty()) fields = parse_q_list(q_spec);
  else
    for (long long p : parse_primes(primes_spec)) fields.emplace_back(p, 1);

  AffineVariety C = select_curve(defs, curve_ids, h.n, 1);
  std::uint64_t budget = budget_from_env(common.budget);

  std::ostringstream csv;
  csv << "q,point_count,hypothesis_ok,sup,rhs_bound,pass,finite_proxy\n";
  bool all_pass = true;
  std::function<Axiom4Report(const std::pair<long long, int>&)> work =
      [&](const std::pair<long long, int>& pe) {
        Field f = Field::make(pe.first, pe.second);
        return axiom4_check(C, h, f, chars.psi_rule().resolve(f),
                            chars.chi_rule().resolve(f), k_suite, budget);
      };
  std::vector<Axiom4Report> reports;
  try {
    reports = parallel_map(fields, work, common.jobs);
  } catch (const Error& e) {
    csv << "# schema: 1\n# partial: true\n";
    write_file(common.out, csv.str());
    throw;
  }
  for (auto& rep : reports) {
    csv << rep.q << "," << rep.point_count << "," << (rep.hypothesis_ok ? 1 : 0)
        << "," << fmt(rep.sup_value) << "," << fmt(rep.rhs_bound) << ","
        << (rep.pass ? 1 : 0) << "," << (rep.finite_proxy ? 1 : 0) << "\n";
    if (rep.hypothesis_ok && !rep.pass) all_pass = false;
  }
  csv << "# schema: 1\n";
  csv << "# all_pass: " << (all_pass ? 1 : 0) << "\n";
  write_file(common.out, csv.str());
  std::map<std::string, double> summary{{"all_pass", all_pass ? 1.0 : 0.0}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_density(const CommonOpts& common, const CharFlags& chars,
                const std::string& q_spec, const std::string& curve_ids,
                int alpha_id, int beta_id, int grid, long long height) {
  Definitions defs = load_defs(common.defs);
  auto ait = defs.linmaps.find(alpha_id);
  auto bit = defs.multmaps.find(beta_id);
  if (ait == defs.linmaps.end()) throw UnresolvedReferenceError("linmap", alpha_id);
  if (bit == defs.multmaps.end()) throw UnresolvedReferenceError("multmap", beta_id);
  auto fields = parse_q_list(q_spec);
  if (fields.size() != 1) throw Error("density expects exactly one --q");
  Field f = Field::make(fields[0].first, fields[0].second);

  int ambient = std::max(ait->second.in_arity, bit->second.in_arity);
  DiagonalSpec spec{select_curve(defs, curve_ids, ambient, 1), ait->second,
                    bit->second};
  DensityReport rep = density_probe(spec, f, chars.psi_rule().resolve(f),
                                    chars.chi_rule().resolve(f), grid, height,
                                    budget_from_env(common.budget));
  json out;
  out["schema"] = 1;
  out["q"] = rep.q;
  out["point_count"] = rep.point_count;
  out["cells_hit"] = rep.cells_hit;
  out["cells_total"] = rep.cells_total;
  out["coverage_fraction"] = jnum(rep.coverage_fraction);
  out["hypothesis_ok"] = rep.hypothesis_ok;
  if (rep.hyperplane_witness) {
    out["hyperplane_witness"] = {{"coeffs", rep.hyperplane_witness->coeffs},
                                 {"value", rep.hyperplane_witness->value}};
  }
  if (rep.coset_witness) {
    out["coset_witness"] = {{"coeffs", rep.coset_witness->coeffs},
                            {"value", rep.coset_witness->value}};
  }
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{
      {"coverage_fraction", rep.coverage_fraction},
      {"cells_hit", (double)rep.cells_hit}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_theta(const CommonOpts& common, const CharFlags& chars,
              const std::string& q_spec, int theta_id) {
  Definitions defs = load_defs(common.defs);
  auto it = defs.thetas.find(theta_id);
  if (it == defs.thetas.end()) throw UnresolvedReferenceError("theta", theta_id);
  const ThetaSpec& spec = it->second;
  auto fields = parse_q_list(q_spec);
  if (fields.size() != 1) throw Error("theta expects exactly one --q");
  Field f = Field::make(fields[0].first, fields[0].second);
  AdditiveCharacter psi = chars.psi_rule().resolve(f);
  MultiplicativeCharacter chi = chars.chi_rule().resolve(f);

  std::uint64_t total = 1;
  for (int i = 0; i < spec.param_arity; ++i) total *= f.q();
  std::ostringstream csv;
  csv << "params,re,im\n";
  std::vector<Fe> params(spec.param_arity, 0);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (int i = 0; i < spec.param_arity; ++i) {
      params[i] = (Fe)(c % f.q());
      c /= f.q();
    }
    auto v = theta_eval(f, spec, params, psi, chi);
    for (int i = 0; i < spec.param_arity; ++i)
      csv << (i ? ";" : "") << params[i];
    csv << "," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
  }
  csv << "# schema: 1\n";
  write_file(common.out, csv.str());
  if (!common.assert_file.empty())
    return check_assertions(common.assert_file, {});
  return 0;
}

int run_measure_fit(const CommonOpts& common, const std::string& primes_spec,
                    int formula_id, const std::string& params_spec) {
  Definitions defs = load_defs(common.defs);
  auto it = defs.formulas.find(formula_id);
  if (it == defs.formulas.end())
    throw UnresolvedReferenceError("formula", formula_id);
  auto primes = parse_primes(primes_spec);
  std::vector<long long> int_params;
  if (!params_spec.empty()) {
    std::stringstream ss(params_spec);
    std::string item;
    while (std::getline(ss, item, ',')) int_params.push_back(std::stoll(item));
  }
  // count per prime first so a failure can flush the partial counts
  std::vector<std::uint64_t> counts;
  std::vector<long long> done;
  SizeEstimate est;
  try {
    for (long long p : primes) {
      Field f = Field::make(p, 1);
      std::vector<Fe> params;
      for (long long v : int_params) params.push_back(f.from_int(v));
      counts.push_back(
          formula_points(f, it->second, budget_from_env(common.budget), {}, params)
              .size());
      done.push_back(p);
    }
    est = fit_size_estimate(primes, counts);
  } catch (const Error& e) {
    json out;
    out["schema"] = 1;
    out["partial"] = true;
    out["error"] = e.what();
    out["primes"] = done;
    out["counts"] = counts;
    write_file(common.out, out.dump(2) + "\n");
    throw;
  }
  json out;
  out["schema"] = 1;
  out["family"] = print_formula(it->second);
  out["primes"] = est.primes;
  out["counts"] = est.counts;
  out["d"] = est.d;
  out["mu_num"] = est.mu.num;
  out["mu_den"] = est.mu.den;
  out["mu_raw"] = jnum(est.mu_raw);
  out["C"] = jnum(est.C);
  json res = json::array();
  for (double r : est.residuals) res.push_back(jnum(r));
  out["residuals"] = res;
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{{"d", (double)est.d},
                                        {"mu_num", (double)est.mu.num},
                                        {"mu_den", (double)est.mu.den},
                                        {"mu", est.mu.to_double()},
                                        {"C", est.C}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_integrate(const CommonOpts& common, const CharFlags& chars,
                  const std::string& primes_spec, int predicate_id, int set_id,
                  const std::string& params_spec) {
  Definitions defs = load_defs(common.defs);
  auto pit = defs.predicates.find(predicate_id);
  if (pit == defs.predicates.end())
    throw UnresolvedReferenceError("predicate", predicate_id);
  auto bit = defs.formulas.find(set_id);
  if (bit == defs.formulas.end()) throw UnresolvedReferenceError("formula", set_id);
  auto primes = parse_primes(primes_spec);
  std::vector<long long> int_params;
  if (!params_spec.empty()) {
    std::stringstream ss(params_spec);
    std::string item;
    while (std::getline(ss, item, ',')) int_params.push_back(std::stoll(item));
  }
  std::vector<IntegralReport::Row> rows;
  IntegralReport rep;
  try {
    for (long long p : primes) {
      Field f = Field::make(p, 1);
      rows.push_back(integrate_one(pit->second, bit->second, defs, f,
                                   chars.psi_rule(), chars.chi_rule(),
                                   budget_from_env(common.budget), int_params));
    }
    rep = finalize_integral_report(std::move(rows));
  } catch (const Error& e) {
    json out;
    out["schema"] = 1;
    out["partial"] = true;
    out["error"] = e.what();
    json values = json::array();
    for (auto& row : rows)
      values.push_back({row.q, jnum(row.value.real()), jnum(row.value.imag())});
    out["values"] = values;
    write_file(common.out, out.dump(2) + "\n");
    throw;
  }
  json out;
  out["schema"] = 1;
  json values = json::array();
  for (auto& row : rep.values)
    values.push_back({row.q, jnum(row.value.real()), jnum(row.value.imag())});
  out["values"] = values;
  out["tail_max"] = jnum(rep.tail_max);
  out["slope"] = jnum(rep.slope);
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{{"tail_max", rep.tail_max},
                                        {"slope", rep.slope}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_fubini(const CommonOpts& common, const CharFlags& chars,
               const std::string& q_spec, int predicate_id, int set_id, int split) {
  Definitions defs = load_defs(common.defs);
  auto pit = defs.predicates.find(predicate_id);
  if (pit == defs.predicates.end())
    throw UnresolvedReferenceError("predicate", predicate_id);
  auto bit = defs.formulas.find(set_id);
  if (bit == defs.formulas.end()) throw UnresolvedReferenceError("formula", set_id);
  auto fields = parse_q_list(q_spec);
  if (fields.size() != 1) throw Error("fubini expects exactly one --q");
  Field f = Field::make(fields[0].first, fields[0].second);
  FubiniReport rep = fubini_check(pit->second, bit->second, split, defs, f,
                                  chars.psi_rule().resolve(f),
                                  chars.chi_rule().resolve(f),
                                  budget_from_env(common.budget));
  json out;
  out["schema"] = 1;
  out["lhs"] = {jnum(rep.lhs.real()), jnum(rep.lhs.imag())};
  out["rhs"] = {jnum(rep.rhs.real()), jnum(rep.rhs.imag())};
  out["delta"] = jnum(rep.delta);
  out["hypothesis_ok"] = rep.hypothesis_ok;
  out["fiber_count"] = rep.fiber_count;
  out["fiber_size"] = rep.fiber_size;
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{{"delta", rep.delta},
                                        {"hypothesis_ok", rep.hypothesis_ok ? 1.0 : 0.0}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_decompose(const CommonOpts& common, const CharFlags& chars,
                  const std::string& q_spec, int predicate_id, int set_id,
                  long long order_bound) {
  Definitions defs = load_defs(common.defs);
  auto pit = defs.predicates.find(predicate_id);
  if (pit == defs.predicates.end())
    throw UnresolvedReferenceError("predicate", predicate_id);
  auto bit = defs.formulas.find(set_id);
  if (bit == defs.formulas.end()) throw UnresolvedReferenceError("formula", set_id);
  auto fields = parse_q_list(q_spec);
  if (fields.size() != 1) throw Error("decompose expects exactly one --q");
  Field f = Field::make(fields[0].first, fields[0].second);
  CaseDecomposition d = case_decompose(pit->second, bit->second, defs, f,
                                       chars.psi_rule().resolve(f),
                                       chars.chi_rule().resolve(f), order_bound,
                                       budget_from_env(common.budget));
  json out;
  out["schema"] = 1;
  out["chi_order"] = d.chi_order;
  json cells = json::array();
  bool all_equal = true;
  for (auto& cell : d.cells) {
    json jc;
    json values = json::array();
    for (auto& v : cell.chi_values) {
      if (v.zero) values.push_back("0");
      else values.push_back(std::to_string(v.angle.num) + "/" +
                            std::to_string(v.angle.den));
    }
    jc["chi_values"] = values;
    jc["size"] = cell.points.size();
    jc["ring_formula"] = print_formula(cell.ring_formula);
    jc["representatives"] = cell.representatives;
    jc["set_equal"] = cell.set_equal;
    all_equal &= cell.set_equal;
    cells.push_back(jc);
  }
  out["cells"] = cells;
  out["reassembled_re"] = jnum(d.reassembled_average.real());
  out["reassembled_im"] = jnum(d.reassembled_average.imag());
  out["delta_vs_direct"] = jnum(d.delta_vs_direct);
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{
      {"delta_vs_direct", d.delta_vs_direct},
      {"cells", (double)d.cells.size()},
      {"all_set_equal", all_equal ? 1.0 : 0.0}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

int run_discrepancy(const CommonOpts& common, const std::string& kronecker,
                    int n, long long H, double Cd, int grid_res) {
  std::vector<double> alpha;
  std::stringstream ss(kronecker);
  std::string item;
  while (std::getline(ss, item, ',')) alpha.push_back(std::stod(item));
  if (alpha.empty()) throw Error("--kronecker needs at least one coordinate");
  TorusSequence X = TorusSequence::kronecker(alpha, n);
  double dis = discrepancy(X, grid_res);
  double bound = etk_bound(X, {H, Cd});
  json out;
  out["schema"] = 1;
  out["d"] = X.dim;
  out["n"] = n;
  out["discrepancy"] = jnum(dis);
  out["H"] = H;
  out["C_d"] = jnum(Cd > 0 ? Cd : etk_default_constant(X.dim));
  out["etk_bound"] = jnum(bound);
  out["dominated"] = dis <= bound;
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{{"discrepancy", dis},
                                        {"etk_bound", bound},
                                        {"dominated", dis <= bound ? 1.0 : 0.0}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

Rat parse_rat(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rat(std::stoll(s));
  return Rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

int run_etk_search(const CommonOpts& common, const std::string& gamma_spec,
                   const std::string& box_spec, long long R, long long f,
                   long long K, long long lmax, long long hcheck) {
  std::vector<RationalAngle> gammas;
  {
    std::stringstream ss(gamma_spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      Rat r = parse_rat(item);
      gammas.push_back(RationalAngle::from_rat(r));
    }
  }
  TorusBox box;
  {
    std::stringstream ss(box_spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto dots = item.find("..");
      if (dots == std::string::npos) throw Error("box sides are lo..hi");
      box.sides.emplace_back(parse_rat(item.substr(0, dots)),
                             parse_rat(item.substr(dots + 2)));
    }
  }
  json out;
  out["schema"] = 1;
  try {
    ExponentSearchResult r = exponent_search(gammas, box, R, f, K, lmax, hcheck);
    out["found"] = r.found;
    if (r.found) {
      out["l"] = r.l;
      json angles = json::array();
      for (auto& a : r.achieved)
        angles.push_back(std::to_string(a.num) + "/" + std::to_string(a.den));
      out["achieved"] = angles;
      out["orders"] = r.orders;
    } else {
      out["predicted_horizon"] = r.predicted_horizon;
    }
    write_file(common.out, out.dump(2) + "\n");
    std::map<std::string, double> summary{{"found", r.found ? 1.0 : 0.0},
                                          {"l", (double)r.l}};
    if (!common.assert_file.empty())
      return check_assertions(common.assert_file, summary);
    return 0;
  } catch (const IndependencePrecheckFailedError& e) {
    out["found"] = false;
    out["independence_violation"] = e.alpha;
    write_file(common.out, out.dump(2) + "\n");
    return 1;
  }
}

int run_witness(const CommonOpts& common, int witness_id, long long pmin,
                long long pmax, long long max_records) {
  Definitions defs = load_defs(common.defs);
  auto it = defs.witnesses.find(witness_id);
  if (it == defs.witnesses.end())
    throw UnresolvedReferenceError("witness", witness_id);
  WitnessSpec spec = it->second;
  long long lo = pmin > 0 ? pmin : spec.p_min;
  long long hi = pmax > 0 ? pmax : spec.p_max;
  if (hi <= 0) throw Error("witness needs --pmax or a primes clause in the definition");
  auto records = witness_search(spec, lo, hi, max_records);
  json out;
  out["schema"] = 1;
  out["count"] = records.size();
  json recs = json::array();
  std::size_t verified = 0;
  for (auto& rec : records) {
    json jr;
    jr["p"] = rec.p;
    jr["root"] = rec.root;
    jr["add_twist"] = rec.add_twist;
    jr["mult_exp"] = rec.mult_exp;
    json ga = json::array(), ba = json::array();
    for (auto& a : rec.gen_angles)
      ga.push_back(std::to_string(a.num) + "/" + std::to_string(a.den));
    for (auto& a : rec.basis_angles)
      ba.push_back(std::to_string(a.num) + "/" + std::to_string(a.den));
    jr["gen_angles"] = ga;
    jr["basis_angles"] = ba;
    jr["verified"] = rec.verified;
    verified += rec.verified ? 1 : 0;
    recs.push_back(jr);
  }
  out["verified"] = verified;
  out["records"] = recs;
  write_file(common.out, out.dump(2) + "\n");
  std::map<std::string, double> summary{{"count", (double)records.size()},
                                        {"verified", (double)verified}};
  if (!common.assert_file.empty()) return check_assertions(common.assert_file, summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"charlab: finite-field character-sum laboratory"};
  app.require_subcommand(1);

  struct Sub {
    CommonOpts common;
    CharFlags chars;
    std::string primes = "3..199";
    std::string q;
    std::string curve = "auto";
    int g_id = 1, h_id = 2;
    int laurent_id = 1;
    double k_suite = kAxiom4SuiteConstant;
    int alpha_id = 1, beta_id = 1, grid = 10;
    long long height = 3;
    int theta_id = 1;
    int formula_id = 1;
    std::string params;
    int predicate_id = 1, set_id = 1, split = 1;
    long long order_bound = 12;
    std::string kronecker;
    int n = 1000;
    long long H = 16;
    double Cd = 0.0;
    int grid_res = 16;
    std::string gamma, box;
    long long R = 1, f = 1, K = 1, lmax = 1000000, hcheck = 8;
    int witness_id = 1;
    long long pmin = 0, pmax = 0, max_records = 0;
  };
  auto sub = std::make_shared<Sub>();

  auto add_char_flags = [&](CLI::App* cmd) {
    cmd->add_option("--psi-c", sub->chars.psi_c,
                    "additive twist c (0 = trivial, 1 = standard)");
    cmd->add_option("--chi-k", sub->chars.chi,
                    "multiplicative index k, or 'quadratic'");
  };

  CLI::App* c_sum = app.add_subcommand("sum", "one-shot character sum");
  add_common(c_sum, sub->common);
  add_char_flags(c_sum);
  c_sum->add_option("--q", sub->q, "field p^e");
  c_sum->add_option("--primes", sub->primes, "single prime");
  c_sum->add_option("--curve", sub->curve, "poly ids for the curve, or 'none'/'auto'");
  c_sum->add_option("--g-poly", sub->g_id, "poly id of g (default 1)");
  c_sum->add_option("--h-poly", sub->h_id, "poly id of h (default 2)");

  CLI::App* c_weil = app.add_subcommand("weil-scan", "per-prime character sums");
  add_common(c_weil, sub->common);
  add_char_flags(c_weil);
  c_weil->add_option("--primes", sub->primes, "range a..b or list");
  c_weil->add_option("--q", sub->q, "explicit fields p^e,...");
  c_weil->add_option("--curve", sub->curve, "poly ids for the curve");
  c_weil->add_option("--g-poly", sub->g_id, "poly id of g");
  c_weil->add_option("--h-poly", sub->h_id, "poly id of h");

  CLI::App* c_ax = app.add_subcommand("axiom4", "finite sup-inequality over C-prime");
  add_common(c_ax, sub->common);
  add_char_flags(c_ax);
  c_ax->add_option("--primes", sub->primes, "range a..b or list");
  c_ax->add_option("--q", sub->q, "explicit fields");
  c_ax->add_option("--curve", sub->curve, "poly ids for the curve");
  c_ax->add_option("--laurent", sub->laurent_id, "laurent id (default 1)");
  c_ax->add_option("--k-suite", sub->k_suite, "per-monomial Weil constant");

  CLI::App* c_den = app.add_subcommand("density", "property-(*) density probe");
  add_common(c_den, sub->common);
  add_char_flags(c_den);
  c_den->add_option("--q", sub->q, "field p^e")->required();
  c_den->add_option("--curve", sub->curve, "poly ids for the curve");
  c_den->add_option("--alpha", sub->alpha_id, "linmap id");
  c_den->add_option("--beta", sub->beta_id, "multmap id");
  c_den->add_option("--grid", sub->grid, "grid resolution per torus axis");
  c_den->add_option("--height", sub->height, "containment search height");

  CLI::App* c_th = app.add_subcommand("theta", "evaluate a theta spec over all parameters");
  add_common(c_th, sub->common);
  add_char_flags(c_th);
  c_th->add_option("--q", sub->q, "field p^e")->required();
  c_th->add_option("--theta", sub->theta_id, "theta id");

  CLI::App* c_fit = app.add_subcommand("measure-fit", "counting-measure (d, mu, C) fit");
  add_common(c_fit, sub->common);
  c_fit->add_option("--primes", sub->primes, "range a..b or list");
  c_fit->add_option("--formula", sub->formula_id, "formula id (default 1)");
  c_fit->add_option("--params", sub->params, "integer parameter tuple a,b,...");

  CLI::App* c_int = app.add_subcommand("integrate", "per-prime predicate averages");
  add_common(c_int, sub->common);
  add_char_flags(c_int);
  c_int->add_option("--primes", sub->primes, "range a..b or list");
  c_int->add_option("--predicate", sub->predicate_id, "predicate id");
  c_int->add_option("--set", sub->set_id, "formula id of B");
  c_int->add_option("--params", sub->params, "integer parameter tuple a,b,...");

  CLI::App* c_fub = app.add_subcommand("fubini", "direct vs iterated averages");
  add_common(c_fub, sub->common);
  add_char_flags(c_fub);
  c_fub->add_option("--q", sub->q, "field p^e")->required();
  c_fub->add_option("--predicate", sub->predicate_id, "predicate id");
  c_fub->add_option("--set", sub->set_id, "formula id of B");
  c_fub->add_option("--split", sub->split, "size of the inner variable block");

  CLI::App* c_dec = app.add_subcommand("decompose", "case decomposition for small chi order");
  add_common(c_dec, sub->common);
  add_char_flags(c_dec);
  c_dec->add_option("--q", sub->q, "field p^e")->required();
  c_dec->add_option("--predicate", sub->predicate_id, "predicate id");
  c_dec->add_option("--set", sub->set_id, "formula id of B");
  c_dec->add_option("--order-bound", sub->order_bound, "max character order");

  CLI::App* c_dis = app.add_subcommand("discrepancy", "discrepancy and ETK bound");
  add_common(c_dis, sub->common, false);
  c_dis->add_option("--kronecker", sub->kronecker, "alpha coordinates a,b,...")
      ->required();
  c_dis->add_option("--n", sub->n, "sequence length");
  c_dis->add_option("--H", sub->H, "ETK frequency cutoff");
  c_dis->add_option("--Cd", sub->Cd, "ETK constant (default (3/2)^d)");
  c_dis->add_option("--grid", sub->grid_res, "grid resolution for d >= 3");

  CLI::App* c_etk = app.add_subcommand("etk-search", "exponent search on exact angles");
  add_common(c_etk, sub->common, false);
  c_etk->add_option("--gamma", sub->gamma, "angles a/b,c/d,...")->required();
  c_etk->add_option("--box", sub->box, "target box lo..hi per coordinate")->required();
  c_etk->add_option("--R", sub->R, "congruence modulus");
  c_etk->add_option("--f", sub->f, "congruence class (1 <= f <= R)");
  c_etk->add_option("--K", sub->K, "order floor");
  c_etk->add_option("--lmax", sub->lmax, "search horizon");
  c_etk->add_option("--hcheck", sub->hcheck, "independence precheck height");

  CLI::App* c_wit = app.add_subcommand("witness", "limit-theory prime/character witnesses");
  add_common(c_wit, sub->common);
  c_wit->add_option("--witness", sub->witness_id, "witness id (default 1)");
  c_wit->add_option("--pmin", sub->pmin, "lower prime bound");
  c_wit->add_option("--pmax", sub->pmax, "upper prime bound");
  c_wit->add_option("--max-records", sub->max_records, "stop after this many records");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sum->parsed())
      return run_weil_scan_like(sub->common, sub->chars, sub->primes, sub->q,
                                sub->curve, sub->g_id, sub->h_id, true);
    if (c_weil->parsed())
      return run_weil_scan_like(sub->common, sub->chars, sub->primes, sub->q,
                                sub->curve, sub->g_id, sub->h_id, false);
    if (c_ax->parsed())
      return run_axiom4(sub->common, sub->chars, sub->primes, sub->q, sub->curve,
                        sub->laurent_id, sub->k_suite);
    if (c_den->parsed())
      return run_density(sub->common, sub->chars, sub->q, sub->curve, sub->alpha_id,
                         sub->beta_id, sub->grid, sub->height);
    if (c_th->parsed())
      return run_theta(sub->common, sub->chars, sub->q, sub->theta_id);
    if (c_fit->parsed())
      return run_measure_fit(sub->common, sub->primes, sub->formula_id, sub->params);
    if (c_int->parsed())
      return run_integrate(sub->common, sub->chars, sub->primes, sub->predicate_id,
                           sub->set_id, sub->params);
    if (c_fub->parsed())
      return run_fubini(sub->common, sub->chars, sub->q, sub->predicate_id,
                        sub->set_id, sub->split);
    if (c_dec->parsed())
      return run_decompose(sub->common, sub->chars, sub->q, sub->predicate_id,
                           sub->set_id, sub->order_bound);
    if (c_dis->parsed())
      return run_discrepancy(sub->common, sub->kronecker, sub->n, sub->H, sub->Cd,
                             sub->grid_res);
    if (c_etk->parsed())
      return run_etk_search(sub->common, sub->gamma, sub->box, sub->R, sub->f,
                            sub->K, sub->lmax, sub->hcheck);
    if (c_wit->parsed())
      return run_witness(sub->common, sub->witness_id, sub->pmin, sub->pmax,
                         sub->max_records);
  } catch (const SyntaxError& e) {
    std::cerr << "charlab: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "charlab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "charlab: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
