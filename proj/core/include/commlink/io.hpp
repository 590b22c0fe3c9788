#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "commlink/codesign.hpp"
#include "commlink/commgraph.hpp"
#include "commlink/fir.hpp"
#include "commlink/qispace.hpp"
#include "commlink/sysmodel.hpp"

namespace commlink {

using Json = nlohmann::json;

/// Plant document: "A","B1","B2","C1","C2","D12","D21" as row-major nested
/// arrays plus "partition": {"u": [...], "y": [...]} and an optional "x"
/// state split. Throws InputError naming the offending field.
std::pair<PlantModel, Partition> load_plant(const Json& doc);
Json save_plant(const PlantModel& plant, const Partition& part);

/// {"n": int, "adj": [[0/1, ...], ...]}
Graph load_graph(const Json& doc);
Json save_graph(const Graph& g);

/// {"edges": [[i, j], ...]}, (i, j) = link from j to i.
EdgeSet load_edges(const Json& doc);
Json save_edges(const EdgeSet& edges);

/// {"d": int, "blockMasks": [[[0/1, ...]], ...]}
Json save_mask(const TemporalMask& mask);
std::vector<BinaryMatrix> load_block_masks(const Json& doc);

/// {"rows", "cols", "tMin", "tMax", "coeffs": [[[...]], ...]}
FirTM load_fir(const Json& doc);
Json save_fir(const FirTM& X);

/// Accepts either a bare config object or a run manifest with a "config" key.
CodesignConfig load_config(const Json& doc);
Json save_config(const CodesignConfig& cfg);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field);

Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& contents);

/// Decimal text with 17 significant digits ("inf"/"nan" for non-finite).
std::string format_double(double v);

}  // namespace commlink
