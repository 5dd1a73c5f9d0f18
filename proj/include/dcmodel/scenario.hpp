#pragma once

// Scenario files, the registry of named checks and the report they produce.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcmodel/charfn.hpp"
#include "dcmodel/contraction.hpp"
#include "dcmodel/dilation.hpp"
#include "dcmodel/hardy.hpp"
#include "dcmodel/json_io.hpp"
#include "dcmodel/modules.hpp"
#include "dcmodel/rng.hpp"

namespace dcmodel {

inline constexpr int kScenarioSchema = 1;

enum class Regime { Matrix, Hardy, Mixed };

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Matrix: return "matrix";
    case Regime::Hardy: return "hardy";
    case Regime::Mixed: return "mixed";
  }
  return "mixed";
}

struct GeneratorParams {
  int instances = 3;
  int factors = 2;      // tensor factors / Blaschke factors
  int max_dim = 3;      // largest factor dimension
  double norm_cap = 0.8;
  int degree = 6;       // truncation degree
  int vars = 2;         // variables of the Hardy regime
  int coeff_dim = 1;
  int probes = 3;
};

struct CheckRequest {
  std::string name;
  std::optional<double> tolerance;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Regime regime = Regime::Mixed;
  GeneratorParams generator;
  std::vector<CheckRequest> checks;
  std::vector<std::pair<std::string, double>> tolerances;
};

struct CheckOutcome {
  bool pass = false;
  double residual = 0.0;
  double tail_bound = 0.0;
  std::optional<int> safe_cutoff;
  std::string note;
};

struct CheckContext {
  const GeneratorParams& gen;
  double tol;
  Rng& rng;
};

struct CheckEntry {
  std::string name;
  std::string description;
  std::string anchor;
  Regime regime;
  double default_tolerance;
  std::function<CheckOutcome(CheckContext&)> run;
};

namespace checks {

inline ContractionTuple random_tensor_tuple(Rng& rng, const GeneratorParams& g) {
  const int m = rng.uniform_int(1, std::max(1, g.factors));
  std::vector<Matrix> f;
  for (int i = 0; i < m; ++i) f.push_back(rng.matrix_with_norm(rng.uniform_int(1, g.max_dim), rng.uniform(0.2, g.norm_cap)));
  return tensor_tuple(f);
}

inline MoebiusPoint random_point(Rng& rng, size_t n, double radius) {
  std::vector<Complex> c;
  for (size_t k = 0; k < n; ++k) c.push_back(rng.point_in_disk(radius));
  return MoebiusPoint(std::move(c));
}

/// Blaschke product with 1..max_degree zeros in the disk of the given radius.
inline BlaschkeProduct random_blaschke(Rng& rng, int max_degree, double radius) {
  const int m = rng.uniform_int(1, max_degree);
  std::vector<Complex> zeros;
  for (int i = 0; i < m; ++i) zeros.push_back(rng.point_in_disk(radius));
  return {std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi)), zeros};
}

inline void absorb(CheckOutcome& o, double residual, double tail = 0.0) {
  o.residual = std::max(o.residual, residual);
  o.tail_bound = std::max(o.tail_bound, tail);
}

inline void cutoff_min(CheckOutcome& o, int c) { o.safe_cutoff = o.safe_cutoff ? std::min(*o.safe_cutoff, c) : c; }

inline CheckOutcome norm_identity(CheckContext& c) {
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    const ContractionTuple t = random_tensor_tuple(c.rng, c.gen);
    const int d = select_truncation_degree(t, c.tol / 10.0);
    cutoff_min(o, d);
    for (int p = 0; p < c.gen.probes; ++p) {
      const Vector x = c.rng.vector(t.space_dim()).normalized();
      absorb(o, std::abs(norm_identity_check(t, x, d).residual), norm_tail_bound(t, d));
    }
  }
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome dilation_regular(CheckContext& c) {
  CheckOutcome o;
  o.pass = true;
  const int cap = std::min(4, c.gen.degree);
  for (int i = 0; i < c.gen.instances; ++i) {
    const ContractionTuple t = random_tensor_tuple(c.rng, c.gen);
    const DilationReport r = verify_dilation(canonical_embedding(t, c.gen.degree), cap, c.tol);
    absorb(o, std::max(r.dilation_residual, r.regularity_residual), r.certified_tail);
    cutoff_min(o, r.safe_cutoff);
    o.pass = o.pass && r.pass;
  }
  return o;
}

inline CheckOutcome mobius_involution(CheckContext& c) {
  CheckOutcome o;
  bool valid = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    const ContractionTuple t = random_tensor_tuple(c.rng, c.gen);
    const MoebiusPoint lambda = random_point(c.rng, t.size(), 0.9);
    const ContractionTuple once = mobius_tuple(t, lambda);
    valid = valid && validate_tuple(once).pass;
    const ContractionTuple twice = mobius_tuple(once, lambda);
    for (size_t k = 0; k < t.size(); ++k) absorb(o, op_norm(twice[k] - t[k]));
  }
  o.pass = valid && o.residual <= c.tol;
  if (!valid) o.note = "transformed tuple left the class";
  return o;
}

inline CheckOutcome defect_transfer(CheckContext& c) {
  CheckOutcome o;
  o.pass = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    const ContractionTuple t = random_tensor_tuple(c.rng, c.gen);
    const DilationModel m = canonical_embedding(t, c.gen.degree);
    const DefectTransfer r = defect_transfer_check(m, random_point(c.rng, t.size(), 0.6), c.rng.vector(t.space_dim()).normalized());
    absorb(o, r.difference, r.tail_bound);
    o.pass = o.pass && r.pass;
  }
  o.safe_cutoff = c.gen.degree;
  return o;
}

inline CheckOutcome kernel_calculus(CheckContext& c) {
  const auto b = enumerate_basis(c.gen.vars, c.gen.degree, c.gen.coeff_dim);
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    const HardyVector f(b, c.rng.vector(b->size()));
    std::vector<Complex> coords;
    for (int k = 0; k < c.gen.vars; ++k) coords.push_back(c.rng.point_in_disk(0.9));
    const KernelPoint lambda(coords);
    const Vector x = c.rng.vector(c.gen.coeff_dim);
    const HardyVector kx = kernel_vector(lambda, b, x);
    // <f, K_lambda x> = <f(lambda), x>
    absorb(o, std::abs(f.inner(kx) - x.dot(f.evaluate(lambda))) / (f.norm() * kx.norm()));
    // M_k^* K_lambda x = conj(lambda_k) K_lambda x below the top degree
    const Index low = b->section_size(c.gen.degree - 1);
    for (int k = 0; k < c.gen.vars; ++k) {
      const Matrix moved = shift_adjoint_apply(*b, k, kx.coeffs());
      absorb(o, (moved.topRows(low) - std::conj(coords[static_cast<size_t>(k)]) * kx.coeffs().head(low)).norm());
    }
  }
  o.safe_cutoff = c.gen.degree - 1;
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome span_completeness(CheckContext& c) {
  CheckOutcome o;
  o.pass = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    const ContractionTuple t = random_tensor_tuple(c.rng, c.gen);
    const SpanCompleteness r = defect_span_completeness(t, deterministic_grid(static_cast<int>(t.size())), c.tol);
    absorb(o, static_cast<double>(t.space_dim() - r.rank));
    o.pass = o.pass && r.complete;
  }
  return o;
}

inline Matrix random_strict_contraction(CheckContext& c, int max_dim) {
  return c.rng.matrix_with_norm(c.rng.uniform_int(1, max_dim), c.rng.uniform(0.2, c.gen.norm_cap));
}

inline CheckOutcome charfn_identity(CheckContext& c) {
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    const CharFn f = charfn_build(random_strict_contraction(c, c.gen.max_dim));
    for (int p = 0; p < 20; ++p) absorb(o, charfn_identity_check(f, c.rng.point_in_disk(0.95), c.rng.point_in_disk(0.95)));
  }
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome boundary_unitarity(CheckContext& c) {
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i)
    absorb(o, boundary_unitarity_check(charfn_build(random_strict_contraction(c, c.gen.max_dim)), 32));
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome projection_identity(CheckContext& c) {
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    const ProjectionIdentity r = projection_identity_check(random_strict_contraction(c, c.gen.max_dim), c.gen.degree, c.tol);
    absorb(o, r.residual, r.symbol_tail);
    cutoff_min(o, r.safe_cutoff);
  }
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome quotient_model(CheckContext& c) {
  CheckOutcome o;
  o.pass = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    const QuotientModelReport r = quotient_model_check(random_tensor_tuple(c.rng, c.gen), c.gen.degree, c.tol);
    absorb(o, r.distance, r.symbol_tail);
    cutoff_min(o, r.safe_cutoff);
    o.pass = o.pass && r.pass;
  }
  return o;
}

inline CheckOutcome theorem15_family(CheckContext& c) {
  const int n = c.gen.vars, d = c.gen.degree;
  const auto b = enumerate_basis(n, d, 1);
  CheckOutcome o;
  std::vector<HardyOperator> v, vs;
  for (int k = 0; k < n; ++k) {
    v.push_back(theorem15_operator(k, b));
    vs.push_back(v.back().adjoint());
    const HardyOperator s = shift(k, b);
    absorb(o, safe_difference_norm(vs.back() * v.back(), HardyOperator::identity(b)));
    absorb(o, safe_difference_norm(v.back() * v.back(), s * s));
    cutoff_min(o, joint_safe_degree(v.back() * v.back(), s * s));
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k) {
        absorb(o, safe_difference_norm(vs[static_cast<size_t>(j)] * v[static_cast<size_t>(k)],
                                       v[static_cast<size_t>(k)] * vs[static_cast<size_t>(j)]));
        absorb(o, safe_difference_norm(v[static_cast<size_t>(j)] * v[static_cast<size_t>(k)],
                                       v[static_cast<size_t>(k)] * v[static_cast<size_t>(j)]));
      }
  // Monomials of degree below n lose their joint defect once all n operators act.
  const auto wide = enumerate_basis(n, n + 3, 1);
  for (Index mono = 0; mono < wide->section_size(n - 1); ++mono)
    absorb(o, theorem15_joint_defect(wide, n, HardyVector::monomial(wide, wide->monomial(mono))));
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome power_search_check(CheckContext& c) {
  const auto b = enumerate_basis(c.gen.vars, c.gen.degree, 1);
  std::vector<HardyOperator> shifts, t15;
  for (int k = 0; k < c.gen.vars; ++k) {
    shifts.push_back(shift(k, b));
    t15.push_back(theorem15_operator(k, b));
  }
  std::vector<HardyVector> probes;
  const Index low = b->section_size(std::min(2, c.gen.degree / 4));
  for (int p = 0; p < c.gen.probes; ++p) {
    Vector x = Vector::Zero(b->size());
    x.head(low) = c.rng.vector(low);
    probes.emplace_back(b, x);
  }
  CheckOutcome o;
  o.pass = true;
  for (double eps : {0.1, 0.01})
    for (const auto* family : {&shifts, &t15}) {
      const PowerSearch r = power_search(*family, probes, eps);
      for (double ratio : r.ratios) absorb(o, std::max(0.0, (1.0 - eps) - ratio));
      o.pass = o.pass && r.verified;
    }
  return o;
}

inline CheckOutcome beurling_lax(CheckContext& c) {
  const int n = std::min(2, c.gen.vars);
  const auto b = enumerate_basis(n, c.gen.degree, 1);
  CheckOutcome o;
  o.pass = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    std::vector<VariableBlaschke> factors;
    int budget = 3;
    for (int k = 0; k < n && budget > 0; ++k) {
      if (k > 0 && c.rng.uniform() < 0.5) continue;
      factors.push_back({k, random_blaschke(c.rng, budget, 0.4)});
      budget -= factors.back().eta.degree();
    }
    const SubmoduleHandle s = submodule_from_inner(b, factors, 1e-6);
    const WanderingExtraction w = wandering_generator_extract(s);
    absorb(o, w.deviation, s.truncation_tail);
    cutoff_min(o, s.cutoff);
    o.pass = o.pass && w.dim == 1 && w.deviation <= c.tol;
  }
  return o;
}

inline CheckOutcome coordinate_ideal(CheckContext& c) {
  const auto b = enumerate_basis(2, std::clamp(c.gen.degree, 2, 8), 1);
  MatrixPolynomial z1(1, 1), z2(1, 1);
  z1.add(MultiIndex{1, 0}, Matrix::Ones(1, 1));
  z2.add(MultiIndex{0, 1}, Matrix::Ones(1, 1));
  const SubmoduleHandle s = submodule_from_polynomials(b, {z1, z2});
  const DoubleCommutationReport r = restriction_double_commutation(s, 1e-8);
  CheckOutcome o;
  o.residual = r.cross_commutator;
  o.safe_cutoff = r.cutoff;
  // The fixture must fail double commutation by a clear margin.
  o.pass = r.cross_commutator >= c.tol;
  return o;
}

inline CheckOutcome jordan_quotient(CheckContext& c) {
  const int n = c.gen.vars;
  const int m = std::clamp(c.gen.factors, 1, n);
  const auto b = enumerate_basis(n, c.gen.degree, 1);
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    std::vector<BlaschkeProduct> etas;
    for (int k = 0; k < m; ++k) etas.push_back(BlaschkeProduct::power(c.rng.uniform_int(1, 3)));
    const QuotientHandle q = quotient_tensor_build(b, etas);
    const DoubleCommutationReport r = compression_double_commutation(q, c.tol);
    absorb(o, std::max(r.cross_commutator, r.commutator), q.truncation_tail);
    // Compare on the core columns, whose images stay inside the section.
    Matrix core = Matrix::Zero(q.frame.cols(), static_cast<Index>(q.core.size()));
    for (size_t col = 0; col < q.core.size(); ++col) core(q.core[col], static_cast<Index>(col)) = 1.0;
    for (int k = 0; k < m; ++k) {
      const Index size = etas[static_cast<size_t>(k)].degree();
      Matrix j = Matrix::Zero(size, size);
      j.diagonal(-1).setOnes();
      absorb(o, op_norm((q.compressions[static_cast<size_t>(k)] - expected_tensor_compression(q, static_cast<size_t>(k), j)) * core));
    }
    cutoff_min(o, q.cutoff);
  }
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome projector_product(CheckContext& c) {
  const int n = c.gen.vars, d = c.gen.degree;
  const auto b = enumerate_basis(n, d, 1);
  CheckOutcome o;
  for (int i = 0; i < c.gen.instances; ++i) {
    std::vector<BlaschkeProduct> etas;
    for (int k = 0; k < std::clamp(c.gen.factors, 1, n); ++k) etas.push_back(random_blaschke(c.rng, 3, 0.5));
    std::vector<int> alpha(static_cast<size_t>(n), 0);
    for (int s = 0; s < d / 2; ++s) ++alpha[static_cast<size_t>(c.rng.uniform_int(0, n - 1))];
    absorb(o, projector_product_formula(b, etas, MultiIndex(alpha)).distance);
  }
  o.pass = o.residual <= c.tol;
  return o;
}

inline CheckOutcome kernel_mechanism(CheckContext& c) {
  const int n = c.gen.vars;
  const auto b = enumerate_basis(n, c.gen.degree, 1);
  CheckOutcome o;
  o.pass = true;
  for (int i = 0; i < c.gen.instances; ++i) {
    std::vector<BlaschkeProduct> symbols;
    for (int k = 0; k < n; ++k) symbols.push_back(random_blaschke(c.rng, 2, 0.5));
    const KernelMechanism r = prop36_kernel_check(b, symbols, random_point(c.rng, static_cast<size_t>(n), 0.5));
    absorb(o, r.residual, r.tail_bound);
    o.pass = o.pass && r.pass;
  }
  o.safe_cutoff = c.gen.degree;
  return o;
}

}  // namespace checks

inline const std::vector<CheckEntry>& check_registry() {
  static const std::vector<CheckEntry> registry = {
      {"norm-identity", "partial sums of the defect series reproduce ||x||^2", "Eq. (1.1)", Regime::Matrix, 1e-7,
       checks::norm_identity},
      {"dilation-regular", "canonical embedding is a regular isometric dilation", "Lemma 2.1", Regime::Mixed, 1e-8,
       checks::dilation_regular},
      {"mobius-involution", "Phi_lambda is an involution preserving the class", "Section 1.1", Regime::Matrix, 1e-10,
       checks::mobius_involution},
      {"defect-transfer", "Moebius defect norms agree through the dilation", "Lemma 2.6", Regime::Mixed, 0.0,
       checks::defect_transfer},
      {"kernel-calculus", "kernel reproduction and adjoint-shift eigenvectors", "Lemma 2.3", Regime::Hardy, 1e-12,
       checks::kernel_calculus},
      {"span-completeness", "Moebius defect ranges span the space on the grid", "Lemma 2.7", Regime::Matrix, 1e-10,
       checks::span_completeness},
      {"charfn-identity", "kernel identity of the characteristic function", "Eq. (4.2)", Regime::Matrix, 1e-10,
       checks::charfn_identity},
      {"boundary-unitarity", "characteristic function is unitary on the circle", "Section 4", Regime::Matrix, 1e-8,
       checks::boundary_unitarity},
      {"projection-identity", "UU* = I - M_theta M_theta* on safe degrees", "Eq. (4.3)", Regime::Mixed, 1e-6,
       checks::projection_identity},
      {"theorem-4-5", "model space complement is the join of symbol ranges", "Theorem 4.5", Regime::Mixed, 1e-6,
       checks::quotient_model},
      {"theorem-1-5", "isometry family with V^2 = M^2 and vanishing joint defect", "Theorem 1.5", Regime::Hardy,
       1e-12, checks::theorem15_family},
      {"power-search", "exponents with a certified defect lower bound", "Lemma 2.12", Regime::Hardy, 0.0,
       checks::power_search_check},
      {"beurling-lax", "wandering generator recovers the inner product", "Corollary 5.2", Regime::Hardy, 1e-7,
       checks::beurling_lax},
      {"coordinate-ideal", "[zeta_1, zeta_2] fails double commutation", "Theorem 5.1", Regime::Hardy, 0.1,
       checks::coordinate_ideal},
      {"jordan-quotient", "tensor quotient compressions are Jordan blocks", "Corollary 5.6", Regime::Hardy, 1e-10,
       checks::jordan_quotient},
      {"projector-product", "quotient projector factors over variables", "Corollary 5.6", Regime::Hardy, 1e-10,
       checks::projector_product},
      {"kernel-mechanism", "Moebius-composed symbols fix the kernel", "Proposition 3.6", Regime::Hardy, 0.0,
       checks::kernel_mechanism},
  };
  return registry;
}

inline const CheckEntry& find_check(const std::string& name) {
  for (const auto& e : check_registry())
    if (e.name == name) return e;
  throw Error(Errc::UnknownCheck, "unknown check \"" + name + "\"");
}

namespace detail {

template <class T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("field \"") + key + "\": " + e.what());
  }
}

}  // namespace detail

inline Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "scenario must be a JSON object");
  if (!j.contains("schema")) throw Error(Errc::ParseError, "missing \"schema\"");
  if (detail::field<int>(j, "schema", 0) != kScenarioSchema)
    throw Error(Errc::ParseError, "unsupported schema version");
  Scenario s;
  s.name = detail::field<std::string>(j, "name", "");
  if (s.name.empty()) throw Error(Errc::ParseError, "missing \"name\"");
  s.seed = detail::field<std::uint64_t>(j, "seed", 0);
  const std::string regime = detail::field<std::string>(j, "regime", "mixed");
  if (regime == "matrix")
    s.regime = Regime::Matrix;
  else if (regime == "hardy")
    s.regime = Regime::Hardy;
  else if (regime == "mixed")
    s.regime = Regime::Mixed;
  else
    throw Error(Errc::ParseError, "regime must be matrix, hardy or mixed");

  if (j.contains("generator")) {
    const Json& g = j.at("generator");
    if (!g.is_object()) throw Error(Errc::ParseError, "\"generator\" must be an object");
    auto& p = s.generator;
    p.instances = detail::field(g, "instances", p.instances);
    p.factors = detail::field(g, "factors", p.factors);
    p.max_dim = detail::field(g, "max_dim", p.max_dim);
    p.norm_cap = detail::field(g, "norm_cap", p.norm_cap);
    p.degree = detail::field(g, "degree", p.degree);
    p.vars = detail::field(g, "vars", p.vars);
    p.coeff_dim = detail::field(g, "coeff_dim", p.coeff_dim);
    p.probes = detail::field(g, "probes", p.probes);
    if (p.instances < 0 || p.factors < 1 || p.max_dim < 1 || p.degree < 1 || p.vars < 1 || p.coeff_dim < 1 ||
        p.probes < 0)
      throw Error(Errc::ParseError, "generator counts out of range");
    if (!(p.norm_cap > 0.2 && p.norm_cap < 1.0)) throw Error(Errc::ParseError, "norm_cap must lie in (0.2, 1)");
  }

  if (!j.contains("checks") || !j.at("checks").is_array()) throw Error(Errc::ParseError, "\"checks\" must be an array");
  for (const auto& c : j.at("checks")) {
    CheckRequest r;
    if (c.is_string()) {
      r.name = c.get<std::string>();
    } else if (c.is_object()) {
      r.name = detail::field<std::string>(c, "name", "");
      if (c.contains("tolerance")) r.tolerance = detail::field<double>(c, "tolerance", 0.0);
    } else {
      throw Error(Errc::ParseError, "check entries are names or {name, tolerance} objects");
    }
    find_check(r.name);
    s.checks.push_back(std::move(r));
  }
  if (j.contains("tolerances")) {
    if (!j.at("tolerances").is_object()) throw Error(Errc::ParseError, "\"tolerances\" must be an object");
    for (const auto& [name, value] : j.at("tolerances").items()) {
      find_check(name);
      if (!value.is_number()) throw Error(Errc::ParseError, "tolerance for " + name + " is not a number");
      s.tolerances.emplace_back(name, value.get<double>());
    }
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  return parse_scenario(j);
}

inline Json scenario_json(const Scenario& s) {
  const auto& g = s.generator;
  Json checks = Json::array();
  for (const auto& c : s.checks) {
    Json e = {{"name", c.name}};
    if (c.tolerance) e["tolerance"] = *c.tolerance;
    checks.push_back(e);
  }
  Json tol = Json::object();
  for (const auto& [name, value] : s.tolerances) tol[name] = value;
  return {{"schema", kScenarioSchema},
          {"name", s.name},
          {"seed", s.seed},
          {"regime", regime_name(s.regime)},
          {"generator",
           {{"instances", g.instances},
            {"factors", g.factors},
            {"max_dim", g.max_dim},
            {"norm_cap", g.norm_cap},
            {"degree", g.degree},
            {"vars", g.vars},
            {"coeff_dim", g.coeff_dim},
            {"probes", g.probes}}},
          {"checks", checks},
          {"tolerances", tol}};
}

enum class CheckStatus { Pass, Fail, Skipped };

inline std::string status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "fail";
}

struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  double tolerance = 0.0;
  double residual = 0.0;
  double tail_bound = 0.0;
  std::optional<int> safe_cutoff;
  long long elapsed_ms = 0;
  std::string note;
};

struct Report {
  Scenario scenario;
  std::vector<CheckRecord> records;

  bool pass() const {
    return std::none_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.status == CheckStatus::Fail; });
  }
};

inline double resolve_tolerance(const Scenario& s, const CheckRequest& req, const CheckEntry& entry) {
  if (req.tolerance) return *req.tolerance;
  for (const auto& [name, value] : s.tolerances)
    if (name == req.name) return value;
  return entry.default_tolerance;
}

inline bool regime_allows(Regime scenario, Regime check) { return scenario == Regime::Mixed || scenario == check; }

/// Runs the checks in declared order. Check i draws from Rng(seed + i).
/// SizeOverflow propagates; every other library error fails the check.
inline Report run_scenario(const Scenario& s) {
  Report rep{s, {}};
  for (size_t i = 0; i < s.checks.size(); ++i) {
    const CheckEntry& entry = find_check(s.checks[i].name);
    CheckRecord rec;
    rec.name = entry.name;
    rec.tolerance = resolve_tolerance(s, s.checks[i], entry);
    if (!regime_allows(s.regime, entry.regime)) {
      rec.note = "needs the " + regime_name(entry.regime) + " regime";
      rep.records.push_back(std::move(rec));
      continue;
    }
    Rng rng(s.seed + i);
    CheckContext ctx{s.generator, rec.tolerance, rng};
    const auto start = std::chrono::steady_clock::now();
    try {
      const CheckOutcome out = entry.run(ctx);
      rec.status = out.pass ? CheckStatus::Pass : CheckStatus::Fail;
      rec.residual = out.residual;
      rec.tail_bound = out.tail_bound;
      rec.safe_cutoff = out.safe_cutoff;
      rec.note = out.note;
    } catch (const Error& e) {
      if (e.code() == Errc::SizeOverflow) throw;
      rec.status = CheckStatus::Fail;
      rec.note = e.what();
    }
    rec.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

inline Json report_json(const Report& r) {
  Json checks = Json::array();
  for (const auto& c : r.records) {
    Json e = {{"name", c.name},
              {"status", status_name(c.status)},
              {"tolerance", c.tolerance},
              {"residual", c.residual},
              {"tail_bound", c.tail_bound},
              {"safe_cutoff", c.safe_cutoff ? Json(*c.safe_cutoff) : Json(nullptr)},
              {"elapsed_ms", c.elapsed_ms}};
    if (!c.note.empty()) e["note"] = c.note;
    checks.push_back(e);
  }
  return {{"scenario", scenario_json(r.scenario)}, {"checks", checks}, {"status", r.pass() ? "pass" : "fail"}};
}

inline std::string report_table(const Report& r) {
  std::ostringstream os;
  os << "scenario " << r.scenario.name << " (seed " << r.scenario.seed << ", " << regime_name(r.scenario.regime)
     << ")\n";
  char line[256];
  std::snprintf(line, sizeof line, "  %-20s %-8s %12s %12s %12s %7s %9s\n", "check", "status", "residual", "tolerance",
                "tail", "cutoff", "ms");
  os << line;
  for (const auto& c : r.records) {
    const std::string cut = c.safe_cutoff ? std::to_string(*c.safe_cutoff) : "-";
    std::snprintf(line, sizeof line, "  %-20s %-8s %12.3e %12.3e %12.3e %7s %9lld\n", c.name.c_str(),
                  status_name(c.status).c_str(), c.residual, c.tolerance, c.tail_bound, cut.c_str(), c.elapsed_ms);
    os << line;
    if (!c.note.empty()) os << "    " << c.note << "\n";
  }
  os << "  overall: " << (r.pass() ? "pass" : "fail") << "\n";
  return os.str();
}

}  // namespace dcmodel
