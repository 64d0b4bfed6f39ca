#include <stdexcept>

#include <json.hpp>

#include "entmap/maps.hpp"

namespace entmap {

namespace {

constexpr const char* kConvention = "inner-product";

nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_to_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Index j = 0; j < v.size(); ++j) arr.push_back(v(j));
  return arr;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw std::invalid_argument("expected a non-empty matrix");
  const auto n = static_cast<Index>(j.size());
  const auto d = static_cast<Index>(j[0].size());
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != d) throw std::invalid_argument("ragged matrix");
    for (Index c = 0; c < d; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = j[k].get<double>();
  return v;
}

}  // namespace

std::string to_json(const EntropicMapModel& model) {
  nlohmann::ordered_json j;
  j["epsilon"] = model.epsilon();
  j["atoms"] = matrix_to_json(model.atoms().points());
  j["weights"] = vector_to_json(model.weights());
  j["psi"] = vector_to_json(model.psi());
  j["convention"] = kConvention;
  if (model.rounding_support()) j["rounding_support"] = matrix_to_json(model.rounding_support()->points());
  return j.dump(2);
}

EntropicMapModel entropic_model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("convention", std::string()) != kConvention) {
    throw std::invalid_argument("entropic model JSON: unsupported convention");
  }
  std::optional<PointCloud> support;
  if (j.contains("rounding_support")) support = PointCloud(matrix_from_json(j.at("rounding_support")));
  return EntropicMapModel(PointCloud(matrix_from_json(j.at("atoms"))), vector_from_json(j.at("weights")),
                          vector_from_json(j.at("psi")), j.at("epsilon").get<double>(), std::move(support));
}

}  // namespace entmap
