#include "commlink/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "commlink/errors.hpp"

namespace commlink {
namespace {

const Json& require(const Json& doc, const std::string& key,
                    const std::string& context = "") {
  const std::string field = context.empty() ? key : context + "." + key;
  if (!doc.is_object()) throw InputError(context, "expected a JSON object");
  const auto it = doc.find(key);
  if (it == doc.end()) throw InputError(field, "missing field '" + field + "'");
  return *it;
}

int as_int(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) {
    throw InputError(field, "field '" + field + "' must be an integer");
  }
  return j.get<int>();
}

double as_double(const Json& j, const std::string& field) {
  if (!j.is_number()) {
    throw InputError(field, "field '" + field + "' must be a number");
  }
  return j.get<double>();
}

std::vector<int> int_list(const Json& j, const std::string& field) {
  if (!j.is_array()) throw InputError(field, "field '" + field + "' must be an array");
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(as_int(j[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

BinaryMatrix binary_from_json(const Json& j, const std::string& field) {
  const Eigen::MatrixXd m = matrix_from_json(j, field);
  if (((m.array() != 0.0) && (m.array() != 1.0)).any()) {
    throw InputError(field, "field '" + field + "' must contain only 0 and 1");
  }
  return m.array() != 0.0;
}

Json binary_to_json(const BinaryMatrix& b) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < b.cols(); ++j) row.push_back(b(i, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) {
    throw InputError(field, "field '" + field + "' must be an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) {
    throw InputError(field, "field '" + field + "' must be an array of rows");
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError(field, "field '" + field + "' has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw InputError(field, "field '" + field + "' has a non-numeric entry");
      }
      m(r, c) = v.get<double>();
      if (!std::isfinite(m(r, c))) {
        throw InputError(field, "field '" + field + "' has a non-finite entry");
      }
    }
  }
  return m;
}

std::pair<PlantModel, Partition> load_plant(const Json& doc) {
  if (!doc.is_object()) throw InputError("", "plant document must be an object");
  PlantModel p;
  p.A = matrix_from_json(require(doc, "A"), "A");
  p.B1 = matrix_from_json(require(doc, "B1"), "B1");
  p.B2 = matrix_from_json(require(doc, "B2"), "B2");
  p.C1 = matrix_from_json(require(doc, "C1"), "C1");
  p.C2 = matrix_from_json(require(doc, "C2"), "C2");
  p.D12 = matrix_from_json(require(doc, "D12"), "D12");
  p.D21 = matrix_from_json(require(doc, "D21"), "D21");
  const Json& pj = require(doc, "partition");
  Partition part;
  part.uSizes = int_list(require(pj, "u", "partition"), "partition.u");
  part.ySizes = int_list(require(pj, "y", "partition"), "partition.y");
  if (pj.contains("x")) part.xSizes = int_list(pj["x"], "partition.x");
  part.n = static_cast<int>(part.uSizes.size());
  check_dimensions(p, part);
  return {std::move(p), std::move(part)};
}

Json save_plant(const PlantModel& plant, const Partition& part) {
  Json doc;
  doc["A"] = matrix_to_json(plant.A);
  doc["B1"] = matrix_to_json(plant.B1);
  doc["B2"] = matrix_to_json(plant.B2);
  doc["C1"] = matrix_to_json(plant.C1);
  doc["C2"] = matrix_to_json(plant.C2);
  doc["D12"] = matrix_to_json(plant.D12);
  doc["D21"] = matrix_to_json(plant.D21);
  doc["partition"] = {{"u", part.uSizes}, {"y", part.ySizes}};
  if (!part.xSizes.empty()) doc["partition"]["x"] = part.xSizes;
  return doc;
}

Graph load_graph(const Json& doc) {
  const int n = as_int(require(doc, "n"), "n");
  BinaryMatrix adj = binary_from_json(require(doc, "adj"), "adj");
  if (n < 1 || adj.rows() != n || adj.cols() != n) {
    throw InputError("adj", "field 'adj' must be an n x n matrix with n >= 1");
  }
  return Graph(std::move(adj));
}

Json save_graph(const Graph& g) {
  return {{"n", g.n()}, {"adj", binary_to_json(g.adj)}};
}

EdgeSet load_edges(const Json& doc) {
  const Json& list = require(doc, "edges");
  if (!list.is_array()) throw InputError("edges", "field 'edges' must be an array");
  EdgeSet out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string field = "edges[" + std::to_string(k) + "]";
    if (!list[k].is_array() || list[k].size() != 2) {
      throw InputError(field, "field '" + field + "' must be a pair [i, j]");
    }
    out.edges.emplace_back(as_int(list[k][0], field), as_int(list[k][1], field));
  }
  return out;
}

Json save_edges(const EdgeSet& edges) {
  Json list = Json::array();
  for (const auto& [i, j] : edges.edges) list.push_back({i, j});
  return {{"edges", list}};
}

Json save_mask(const TemporalMask& mask) {
  Json blocks = Json::array();
  for (const auto& b : mask.blockMasks) blocks.push_back(binary_to_json(b));
  return {{"d", mask.d}, {"blockMasks", blocks}};
}

std::vector<BinaryMatrix> load_block_masks(const Json& doc) {
  const int d = as_int(require(doc, "d"), "d");
  const Json& list = require(doc, "blockMasks");
  if (!list.is_array() || static_cast<int>(list.size()) != d) {
    throw InputError("blockMasks", "field 'blockMasks' must hold d matrices");
  }
  std::vector<BinaryMatrix> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    out.push_back(binary_from_json(list[k], "blockMasks[" + std::to_string(k) + "]"));
  }
  return out;
}

FirTM load_fir(const Json& doc) {
  const int rows = as_int(require(doc, "rows"), "rows");
  const int cols = as_int(require(doc, "cols"), "cols");
  const int tMin = as_int(require(doc, "tMin"), "tMin");
  const int tMax = as_int(require(doc, "tMax"), "tMax");
  if (rows < 0 || cols < 0 || tMin < 0 || tMax < tMin - 1) {
    throw InputError("tMax", "invalid FIR shape or delay range");
  }
  const Json& coeffs = require(doc, "coeffs");
  if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != tMax - tMin + 1) {
    throw InputError("coeffs", "field 'coeffs' must hold tMax - tMin + 1 matrices");
  }
  FirTM X(rows, cols, tMin, tMax);
  for (int t = tMin; t <= tMax; ++t) {
    const std::string field = "coeffs[" + std::to_string(t - tMin) + "]";
    Eigen::MatrixXd m = matrix_from_json(coeffs[static_cast<std::size_t>(t - tMin)], field);
    if (m.size() == 0 && rows * cols == 0) continue;
    if (m.rows() != rows || m.cols() != cols) {
      throw InputError(field, "field '" + field + "' has the wrong shape");
    }
    X.at(t) = std::move(m);
  }
  return X;
}

Json save_fir(const FirTM& X) {
  Json coeffs = Json::array();
  for (int t = X.t_min(); t <= X.t_max(); ++t) coeffs.push_back(matrix_to_json(X.at(t)));
  return {{"rows", X.rows()},
          {"cols", X.cols()},
          {"tMin", X.t_min()},
          {"tMax", X.t_max()},
          {"coeffs", coeffs}};
}

CodesignConfig load_config(const Json& input) {
  const Json& doc = input.is_object() && input.contains("config") ? input["config"] : input;
  if (!doc.is_object()) throw InputError("config", "config must be an object");
  CodesignConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "lambdaGrid") {
      if (!value.is_array()) throw InputError(key, "field 'lambdaGrid' must be an array");
      cfg.lambdaGrid.clear();
      for (std::size_t k = 0; k < value.size(); ++k) {
        cfg.lambdaGrid.push_back(as_double(value[k], key + "[" + std::to_string(k) + "]"));
      }
    } else if (key == "autoGridPoints") {
      cfg.autoGridPoints = as_int(value, key);
    } else if (key == "autoGridRatio") {
      cfg.autoGridRatio = as_double(value, key);
    } else if (key == "N") {
      cfg.N = as_int(value, key);
    } else if (key == "tolTail") {
      cfg.tolTail = as_double(value, key);
    } else if (key == "tolGap") {
      cfg.tolGap = as_double(value, key);
    } else if (key == "tolCg") {
      cfg.tolCg = as_double(value, key);
    } else if (key == "edgeSelectEps") {
      cfg.edgeSelectEps = as_double(value, key);
    } else if (key == "checkHorizon") {
      cfg.checkHorizon = as_int(value, key);
    } else if (key == "maxIters") {
      cfg.maxIters = as_int(value, key);
    } else if (key == "tolZero") {
      cfg.tolZero = as_double(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) {
        throw InputError(key, "field 'seed' must be a non-negative integer");
      }
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw InputError(key, "unknown config field '" + key + "'");
    }
  }
  return cfg;
}

Json save_config(const CodesignConfig& cfg) {
  return {{"lambdaGrid", cfg.lambdaGrid},
          {"autoGridPoints", cfg.autoGridPoints},
          {"autoGridRatio", cfg.autoGridRatio},
          {"N", cfg.N},
          {"tolTail", cfg.tolTail},
          {"tolGap", cfg.tolGap},
          {"tolCg", cfg.tolCg},
          {"edgeSelectEps", cfg.edgeSelectEps},
          {"checkHorizon", cfg.checkHorizon},
          {"maxIters", cfg.maxIters},
          {"tolZero", cfg.tolZero},
          {"seed", cfg.seed}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), "cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string(),
                     "invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into '" + path.string() +
                             "': " + ec.message());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace commlink
