#include "hstc/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "hstc/errors.hpp"

namespace hstc {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw FormatError("model field '" + field + "' must be a non-empty array");
  }
  const Index rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) {
    throw FormatError("model field '" + field + "' must hold rows of numbers");
  }
  const Index cols = static_cast<Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw FormatError("model field '" + field + "' has ragged rows");
    }
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw FormatError("model field '" + field +
                          "' contains a non-finite or non-numeric entry");
      }
      m(r, c) = v.get<double>();
    }
  }
  if (!m.allFinite()) {
    throw FormatError("model field '" + field + "' contains non-finite values");
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw FormatError("model field '" + field + "' must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw FormatError("model field '" + field + "' contains a non-numeric entry");
    }
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json common_header(const std::string& type, const Shape& input_shape,
                   Index num_classes,
                   const std::optional<FeatureScaling>& scaling,
                   const std::optional<SplitSpec>& split) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model_type"] = type;
  doc["input_shape"] = input_shape;
  doc["num_classes"] = num_classes;
  if (scaling) {
    json s;
    s["mean"] = std::vector<double>(scaling->mean.begin(), scaling->mean.end());
    s["std"] =
        std::vector<double>(scaling->stddev.begin(), scaling->stddev.end());
    doc["scaling"] = std::move(s);
  } else {
    doc["scaling"] = nullptr;
  }
  if (split) {
    doc["split"] = {{"seed", split->seed},
                    {"samples_per_class", split->samples_per_class}};
  }
  return doc;
}

void write_doc(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write model file " + path.string());
  }
  out << doc.dump(1) << "\n";
}

const json& require(const json& doc, const char* field) {
  if (!doc.contains(field)) {
    throw FormatError("model file: missing field '" + std::string(field) + "'");
  }
  return doc[field];
}

Shape shape_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw FormatError("model field 'input_shape' must be a non-empty array");
  }
  Shape shape;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<Index>() < 1) {
      throw FormatError("model field 'input_shape' must hold positive integers");
    }
    shape.push_back(e.get<Index>());
  }
  return shape;
}

std::optional<FeatureScaling> scaling_from_json(const json& doc, Index dim) {
  const json& s = require(doc, "scaling");
  if (s.is_null()) return std::nullopt;
  FeatureScaling out;
  out.mean = vector_from_json(require(s, "mean"), "scaling.mean");
  out.stddev = vector_from_json(require(s, "std"), "scaling.std");
  if (out.mean.size() != dim || out.stddev.size() != dim) {
    throw FormatError("model field 'scaling' length does not match input_shape");
  }
  return out;
}

std::optional<SplitSpec> split_from_json(const json& doc) {
  if (!doc.contains("split") || doc["split"].is_null()) return std::nullopt;
  const json& s = doc["split"];
  SplitSpec spec;
  spec.seed = require(s, "seed").get<std::uint64_t>();
  spec.samples_per_class = require(s, "samples_per_class").get<Index>();
  return spec;
}

std::vector<Eigen::MatrixXd> factors_from_json(const json& doc,
                                               const Shape& shape, Index cols) {
  const json& jf = require(doc, "factors");
  if (!jf.is_array() || jf.size() != shape.size()) {
    throw FormatError("model field 'factors' must list one matrix per mode");
  }
  std::vector<Eigen::MatrixXd> factors;
  for (std::size_t l = 0; l < jf.size(); ++l) {
    Eigen::MatrixXd f =
        matrix_from_json(jf[l], "factors[" + std::to_string(l) + "]");
    if (f.rows() != shape[l] || f.cols() != cols) {
      throw FormatError("model field 'factors[" + std::to_string(l) +
                        "]' has shape " + std::to_string(f.rows()) + "x" +
                        std::to_string(f.cols()) + ", expected " +
                        std::to_string(shape[l]) + "x" + std::to_string(cols));
    }
    factors.push_back(std::move(f));
  }
  return factors;
}

}  // namespace

void save_model(const std::filesystem::path& path, const TensorLRModel& m,
                const std::optional<SplitSpec>& split) {
  json doc = common_header("tensor_lr", m.input_shape, m.num_classes,
                           m.scaling, split);
  json factors = json::array();
  for (const auto& f : m.weights.factors) {
    factors.push_back(matrix_to_json(f));
  }
  doc["factors"] = std::move(factors);
  write_doc(path, doc);
}

void save_model(const std::filesystem::path& path, const Rank1FNNModel& m,
                const std::optional<SplitSpec>& split) {
  json doc = common_header("rank1_fnn", m.input_shape, m.num_classes,
                           m.scaling, split);
  doc["num_hidden"] = m.num_hidden;
  json factors = json::array();
  for (const auto& f : m.hidden.factors) {
    factors.push_back(matrix_to_json(f));
  }
  doc["factors"] = std::move(factors);
  doc["output_weights"] = matrix_to_json(m.output);
  write_doc(path, doc);
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open model file " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("model file " + path.string() + ": " + e.what());
  }

  const int version = require(doc, "format_version").get<int>();
  if (version != kFormatVersion) {
    throw FormatError("model field 'format_version' is " +
                      std::to_string(version) + ", expected " +
                      std::to_string(kFormatVersion));
  }
  const std::string type = require(doc, "model_type").get<std::string>();
  const Shape shape = shape_from_json(require(doc, "input_shape"));
  const Index num_classes = require(doc, "num_classes").get<Index>();
  if (num_classes < 2) {
    throw FormatError("model field 'num_classes' must be >= 2");
  }
  const Index dim = shape_size(shape);

  ModelFile out;
  out.split = split_from_json(doc);
  if (type == "tensor_lr") {
    TensorLRModel m;
    m.input_shape = shape;
    m.num_classes = num_classes;
    m.weights.factors = factors_from_json(doc, shape, num_classes);
    m.scaling = scaling_from_json(doc, dim);
    out.model = std::move(m);
  } else if (type == "rank1_fnn") {
    Rank1FNNModel m;
    m.input_shape = shape;
    m.num_classes = num_classes;
    m.num_hidden = require(doc, "num_hidden").get<Index>();
    if (m.num_hidden < 1) {
      throw FormatError("model field 'num_hidden' must be >= 1");
    }
    m.hidden.factors = factors_from_json(doc, shape, m.num_hidden);
    m.output = matrix_from_json(require(doc, "output_weights"), "output_weights");
    if (m.output.rows() != m.num_hidden || m.output.cols() != num_classes) {
      throw FormatError("model field 'output_weights' has wrong shape");
    }
    m.scaling = scaling_from_json(doc, dim);
    out.model = std::move(m);
  } else {
    throw FormatError("model field 'model_type' has unknown value '" + type +
                      "'");
  }
  return out;
}

}  // namespace hstc
