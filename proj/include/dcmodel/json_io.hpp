#pragma once

// JSON encodings of Hardy-space objects and verification reports.
// Vectors and operators are stored sparsely as index/value triplets next to a
// descriptor of their basis.

#include <json.hpp>

#include "dcmodel/dilation.hpp"
#include "dcmodel/hardy.hpp"

namespace dcmodel {

using Json = nlohmann::ordered_json;

inline Json basis_json(const HardyBasis& b) {
  return {{"vars", b.num_vars()}, {"degree", b.max_degree()}, {"coeff_dim", b.coeff_dim()}};
}

inline BasisPtr basis_from_json(const Json& j) {
  try {
    return enumerate_basis(j.at("vars").get<int>(), j.at("degree").get<int>(), j.at("coeff_dim").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("basis descriptor: ") + e.what());
  }
}

inline Json to_json(const HardyVector& v) {
  Json entries = Json::array();
  const Vector& c = v.coeffs();
  for (Index i = 0; i < c.size(); ++i)
    if (c(i) != Complex(0.0)) entries.push_back({i, c(i).real(), c(i).imag()});
  return {{"basis", basis_json(*v.basis())}, {"entries", entries}};
}

inline HardyVector hardy_vector_from_json(const Json& j) {
  const BasisPtr b = basis_from_json(j.at("basis"));
  Vector c = Vector::Zero(b->size());
  try {
    for (const auto& e : j.at("entries")) {
      const Index i = e.at(0).get<Index>();
      if (i < 0 || i >= c.size()) throw Error(Errc::IndexOutOfRange, "vector entry index");
      c(i) = Complex(e.at(1).get<double>(), e.at(2).get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("vector entries: ") + e.what());
  }
  return {b, c};
}

inline Json to_json(const HardyOperator& op) {
  Json entries = Json::array();
  const Matrix& m = op.matrix();
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != Complex(0.0)) entries.push_back({r, c, m(r, c).real(), m(r, c).imag()});
  return {{"basis_in", basis_json(*op.basis_in())},
          {"basis_out", basis_json(*op.basis_out())},
          {"safe_input_degree", op.safe_input_degree()},
          {"entries", entries}};
}

inline Json to_json(const DilationReport& r) {
  return {{"dilation_residual", r.dilation_residual},
          {"regularity_residual", r.regularity_residual},
          {"dilation_raw", r.dilation_raw},
          {"regularity_raw", r.regularity_raw},
          {"truncation_tail", r.truncation_tail},
          {"certified_tail", r.certified_tail},
          {"minimality_rank", r.minimality_rank},
          {"minimality_target", r.minimality_target},
          {"safe_cutoff", r.safe_cutoff},
          {"pass", r.pass}};
}

}  // namespace dcmodel
