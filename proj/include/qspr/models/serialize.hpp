#pragma once

#include "json.hpp"
#include "qspr/models/model.hpp"

namespace qspr::models {

// Row-major nested arrays; doubles keep full round-trip precision.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace qspr::models
