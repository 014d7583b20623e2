// Copyright 2026 The scoreprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scoreprobe/serialization.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError("matrix has the wrong number of rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError("matrix row has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[c];
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const Json& j, Eigen::Index size) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != size)
    throw ConfigError("vector has the wrong length");
  return Eigen::Map<const Vector>(values.data(), size);
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void reject_unknown_keys(const Json& obj,
                         std::initializer_list<const char*> allowed,
                         std::string_view where) {
  if (!obj.is_object())
    throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known)
      throw ConfigError("unknown key '" + item.key() + "' in " +
                        std::string(where));
  }
}

Json to_json(const ExtractorDescriptor& desc) {
  Json j{{"seed", desc.seed},
         {"n", desc.n},
         {"d", desc.d},
         {"kind", std::string(to_string(desc.kind))}};
  if (desc.correlation)
    j["correlation"] = {{"rho", desc.correlation->rho},
                        {"seed", desc.correlation->seed}};
  return j;
}

ExtractorDescriptor extractor_descriptor_from_json(const Json& j) {
  reject_unknown_keys(j, {"seed", "n", "d", "kind", "correlation"},
                      "extractor");
  ExtractorDescriptor d;
  d.seed = j.at("seed").get<std::uint64_t>();
  d.n = j.at("n").get<Eigen::Index>();
  d.d = j.at("d").get<Eigen::Index>();
  d.kind = nonlinearity_from_string(j.at("kind").get<std::string>());
  if (j.contains("correlation")) {
    const Json& c = j.at("correlation");
    reject_unknown_keys(c, {"rho", "seed"}, "correlation");
    d.correlation = CorrelationSpec{c.at("rho").get<double>(),
                                    c.at("seed").get<std::uint64_t>()};
  }
  return d;
}

Json to_json(const NesConfig& cfg) {
  Json j{{"samples_per_draw", cfg.samples_per_draw},
         {"sigma", cfg.sigma},
         {"lr_initial", cfg.lr_initial},
         {"lr_min", cfg.lr_min},
         {"momentum", cfg.momentum},
         {"max_iter", cfg.max_iter},
         {"candidate_pool", cfg.candidate_pool},
         {"selected", cfg.selected},
         {"antithetic", cfg.antithetic},
         {"update_order", "velocity = momentum * velocity + g; step on velocity"}};
  j["early_stop_window"] =
      cfg.early_stop_window ? Json(*cfg.early_stop_window) : Json(nullptr);
  j["query_budget"] = cfg.query_budget ? Json(*cfg.query_budget) : Json(nullptr);
  return j;
}

NesConfig nes_config_from_json(const Json& j, NesConfig c) {
  reject_unknown_keys(j,
                      {"samples_per_draw", "sigma", "lr_initial", "lr_min",
                       "momentum", "max_iter", "candidate_pool", "selected",
                       "antithetic", "early_stop_window", "query_budget",
                       "update_order"},
                      "nes config");
  read_if(j, "samples_per_draw", c.samples_per_draw);
  read_if(j, "sigma", c.sigma);
  read_if(j, "lr_initial", c.lr_initial);
  read_if(j, "lr_min", c.lr_min);
  read_if(j, "momentum", c.momentum);
  read_if(j, "max_iter", c.max_iter);
  read_if(j, "candidate_pool", c.candidate_pool);
  read_if(j, "selected", c.selected);
  read_if(j, "antithetic", c.antithetic);
  if (j.contains("early_stop_window"))
    c.early_stop_window = j["early_stop_window"].is_null()
                              ? std::nullopt
                              : std::optional<int>(j["early_stop_window"].get<int>());
  if (j.contains("query_budget"))
    c.query_budget =
        j["query_budget"].is_null()
            ? std::nullopt
            : std::optional<std::uint64_t>(j["query_budget"].get<std::uint64_t>());
  c.validate();
  return c;
}

Json to_json(const TrainConfig& cfg) {
  return Json{{"lambda_ic", cfg.lambda_ic},   {"lambda_sc", cfg.lambda_sc},
              {"batch_size", cfg.batch_size}, {"steps", cfg.steps},
              {"lr_initial", cfg.lr_initial}, {"lr_final", cfg.lr_final},
              {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  reject_unknown_keys(j,
                      {"lambda_ic", "lambda_sc", "batch_size", "steps",
                       "lr_initial", "lr_final", "seed"},
                      "train config");
  read_if(j, "lambda_ic", c.lambda_ic);
  read_if(j, "lambda_sc", c.lambda_sc);
  read_if(j, "batch_size", c.batch_size);
  read_if(j, "steps", c.steps);
  read_if(j, "lr_initial", c.lr_initial);
  read_if(j, "lr_final", c.lr_final);
  read_if(j, "seed", c.seed);
  c.validate();
  return c;
}

Json to_json(const GdConfig& cfg) {
  return Json{{"learning_rate", cfg.learning_rate},
              {"max_iter", cfg.max_iter},
              {"tolerance", cfg.tolerance}};
}

GdConfig gd_config_from_json(const Json& j, GdConfig c) {
  reject_unknown_keys(j, {"learning_rate", "max_iter", "tolerance"},
                      "gd config");
  read_if(j, "learning_rate", c.learning_rate);
  read_if(j, "max_iter", c.max_iter);
  read_if(j, "tolerance", c.tolerance);
  return c;
}

Json inverse_model_document(const InverseModel& model,
                            const ExtractorDescriptor& source,
                            const TrainConfig* config) {
  Json doc{{"format", "scoreprobe.inverse_model"},
           {"version", kInverseModelFormat},
           {"kind", std::string(to_string(model.kind()))},
           {"n", model.output_dim()},
           {"d", model.feature_dim()},
           {"source_extractor_seed", model.source_extractor_seed()},
           {"source_extractor", to_json(source)},
           {"map", matrix_to_json(model.map())},
           {"offset", vector_to_json(model.offset())},
           {"context", vector_to_json(model.context())}};
  doc["train_config"] = config ? to_json(*config) : Json(nullptr);
  return doc;
}

InverseModel inverse_model_from_document(const Json& doc) {
  reject_unknown_keys(doc,
                      {"format", "version", "kind", "n", "d",
                       "source_extractor_seed", "source_extractor", "map",
                       "offset", "context", "train_config"},
                      "inverse model document");
  if (doc.at("format") != "scoreprobe.inverse_model")
    throw ConfigError("not an inverse model document");
  if (doc.at("version").get<int>() != kInverseModelFormat)
    throw ConfigError("unsupported inverse model version");
  const auto n = doc.at("n").get<Eigen::Index>();
  const auto d = doc.at("d").get<Eigen::Index>();
  return InverseModel(inverse_kind_from_string(doc.at("kind").get<std::string>()),
                      matrix_from_json(doc.at("map"), n, d),
                      vector_from_json(doc.at("offset"), n),
                      vector_from_json(doc.at("context"), n),
                      doc.at("source_extractor_seed").get<std::uint64_t>());
}

Json orthogonal_set_document(const OrthogonalSet& set) {
  return Json{{"format", "scoreprobe.orthogonal_set"},
              {"version", kOrthogonalSetFormat},
              {"order_seed", set.order_seed},
              {"indices", set.indices},
              {"delta", set.delta},
              {"m", set.m()},
              {"certified_max_abs_cos", set.certified_max_abs_cos}};
}

Json step_record_json(const StepRecord& step) {
  return Json{{"iteration", step.iteration},
              {"queries", step.queries},
              {"best_score", step.best_score}};
}

std::string content_hash(const Json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace scoreprobe
