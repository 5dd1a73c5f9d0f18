// One line per acceptance criterion; exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dcmodel/scenario.hpp"

using namespace dcmodel;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

GeneratorParams tensor_params() {
  GeneratorParams g;
  g.factors = 3;
  g.max_dim = 4;
  g.norm_cap = 0.8;
  return g;
}

const std::vector<ContractionTuple>& shared_tuples() {
  static const std::vector<ContractionTuple> tuples = [] {
    Rng rng(1001);
    std::vector<ContractionTuple> out;
    for (int i = 0; i < 50; ++i) out.push_back(checks::random_tensor_tuple(rng, tensor_params()));
    return out;
  }();
  return tuples;
}

CheckOutcome run_check(CheckOutcome (*fn)(CheckContext&), GeneratorParams g, double tol, std::uint64_t seed) {
  Rng rng(seed);
  CheckContext ctx{g, tol, rng};
  return fn(ctx);
}

Verdict norm_identity() {
  Rng rng(1002);
  double worst = 0.0;
  int top_degree = 0;
  for (const auto& t : shared_tuples()) {
    const int d = select_truncation_degree(t, 1e-8);
    top_degree = std::max(top_degree, d);
    for (int p = 0; p < 3; ++p) {
      const Vector x = rng.vector(t.space_dim()).normalized();
      worst = std::max(worst, std::abs(norm_identity_check(t, x, d).residual));
    }
  }
  return {worst <= 1e-7, fmt("max |sum - |x|^2| = %.2e, largest degree %.0f", worst, top_degree)};
}

Verdict dilation() {
  double comp = 0.0, raw_excess = 0.0;
  bool full_rank = true;
  for (const auto& t : shared_tuples()) {
    const DilationReport r = verify_dilation(canonical_embedding(t, 6), 4, 1e-8);
    comp = std::max({comp, r.dilation_residual, r.regularity_residual});
    raw_excess = std::max(raw_excess, std::max(r.dilation_raw, r.regularity_raw) - r.certified_tail);
    full_rank = full_rank && r.minimality_rank == r.minimality_target;
  }
  return {comp <= 1e-8 && raw_excess <= 1e-8 && full_rank,
          fmt("compensated residual %.2e, raw residual minus certified tail %.2e", comp, raw_excess)};
}

Verdict mobius_involution() {
  GeneratorParams g = tensor_params();
  g.instances = 100;
  const CheckOutcome o = run_check(checks::mobius_involution, g, 1e-10, 1003);
  return {o.pass, fmt("max involution residual %.2e", o.residual) + (o.note.empty() ? "" : ", " + o.note)};
}

Verdict defect_transfer() {
  Rng rng(1004);
  double worst = 0.0, slack = 1e300;
  bool ok = true;
  for (const auto& t : shared_tuples()) {
    const DilationModel m = canonical_embedding(t, 8);
    const DefectTransfer r = defect_transfer_check(m, checks::random_point(rng, t.size(), 0.6), rng.vector(t.space_dim()).normalized());
    ok = ok && r.pass;
    worst = std::max(worst, r.difference);
    slack = std::min(slack, r.tail_bound - r.difference);
  }
  return {ok, fmt("max difference %.2e, min bound margin %.2e", worst, slack)};
}

Verdict charfn() {
  GeneratorParams g;
  g.instances = 25;
  g.max_dim = 4;
  g.norm_cap = 0.9;
  const CheckOutcome id = run_check(checks::charfn_identity, g, 1e-10, 1005);
  const CheckOutcome bd = run_check(checks::boundary_unitarity, g, 1e-8, 1006);
  double proj = 0.0;
  Rng rng(1007);
  for (Index n : {1, 1, 2, 2}) proj = std::max(proj, projection_identity_check(rng.matrix_with_norm(n, 0.5), 40, 1e-6).residual);
  return {id.pass && bd.pass && proj <= 1e-6,
          fmt("identity %.2e, boundary %.2e, projection %.2e", id.residual, bd.residual, proj)};
}

Verdict quotient_model() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1008);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Matrix a = rng.matrix_with_norm(1, rng.uniform(0.2, 0.5));
    const Matrix b = rng.matrix_with_norm(1, rng.uniform(0.2, 0.5));
    worst = std::max(worst, quotient_model_check(ContractionTuple({a}), 40, 1e-6).distance);
    worst = std::max(worst, quotient_model_check(tensor_tuple({a, b}), 40, 1e-6).distance);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-6 && secs < 30.0, fmt("max distance %.2e in %.1f s", worst, secs)};
}

Verdict theorem15() {
  GeneratorParams g;
  g.vars = 4;
  g.degree = 6;
  const CheckOutcome o = run_check(checks::theorem15_family, g, 1e-12, 1009);
  return {o.pass, fmt("max residual %.2e", o.residual)};
}

Verdict beurling_lax() {
  GeneratorParams g;
  g.instances = 12;
  g.vars = 2;
  g.degree = 30;
  const CheckOutcome o = run_check(checks::beurling_lax, g, 1e-7, 1010);
  const CheckOutcome fixture = run_check(checks::coordinate_ideal, g, 0.1, 1011);
  return {o.pass && fixture.pass,
          fmt("max grid deviation %.2e, fixture cross-commutator %.2e", o.residual, fixture.residual)};
}

Verdict jordan() {
  GeneratorParams g;
  g.instances = 4;
  g.vars = 2;
  g.factors = 2;
  g.degree = 12;
  const CheckOutcome closed = run_check(checks::jordan_quotient, g, 1e-10, 1012);
  g.vars = 3;
  const CheckOutcome free = run_check(checks::jordan_quotient, g, 1e-10, 1013);
  g.degree = 16;
  const CheckOutcome proj = run_check(checks::projector_product, g, 1e-10, 1014);
  return {closed.pass && free.pass && proj.pass,
          fmt("compressions %.2e / %.2e, projector formula %.2e", closed.residual, free.residual, proj.residual)};
}

Verdict exponent_search() {
  GeneratorParams g;
  g.vars = 3;
  g.degree = 10;
  g.probes = 4;
  const CheckOutcome o = run_check(checks::power_search_check, g, 0.0, 1015);
  return {o.pass, fmt("max shortfall below (1 - eps)|x| %.2e", o.residual)};
}

Verdict kernel_and_span() {
  GeneratorParams g;
  g.instances = 10;
  g.vars = 3;
  g.degree = 8;
  g.coeff_dim = 2;
  const CheckOutcome k = run_check(checks::kernel_calculus, g, 1e-12, 1016);
  int incomplete = 0;
  for (const auto& t : shared_tuples())
    if (!defect_span_completeness(t, deterministic_grid(static_cast<int>(t.size()))).complete) ++incomplete;
  return {k.pass && incomplete == 0, fmt("kernel residual %.2e, incomplete spans %.0f of 50", k.residual, incomplete)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"norm identity", norm_identity},
      {"dilation and regularity", dilation},
      {"Moebius involution", mobius_involution},
      {"defect transfer", defect_transfer},
      {"characteristic function", charfn},
      {"quotient model", quotient_model},
      {"isometry family", theorem15},
      {"Beurling-Lax extraction", beurling_lax},
      {"Jordan tensor quotients", jordan},
      {"power search", exponent_search},
      {"kernel calculus and span completeness", kernel_and_span},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %2zu  %-38s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
