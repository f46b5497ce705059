#pragma once

#include "dmapar/envelope.hpp"
#include "dmapar/model.hpp"
#include "dmapar/snc.hpp"

#include <string>
#include <vector>

namespace dmapar {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kTopologySchemaVersion = 1;

// Model files are JSON objects {"schema":"dmapar-model","version":1,...}.
// `report_json` (a JSON object, may be empty) is stored under "report".
std::string model_to_json(const DMaparHmm& model, const std::string& report_json = "");
DMaparHmm model_from_json(const std::string& text);
void save_model(const std::string& path, const DMaparHmm& model, const std::string& report_json = "");
DMaparHmm load_model(const std::string& path);

// Topology files: {"servers":[{"id","rate_mbps","queues"}],
//                  "flows":[{"id","path":[...],"priority","model"|"trace": file}]}.
// Source paths are resolved against `base_dir`.
TopologySpec topology_from_json(const std::string& text, const std::string& base_dir = "");
std::string topology_to_json(const TopologySpec& topo);
TopologySpec load_topology(const std::string& path);

std::string envelope_csv(const std::vector<SigmaRhoPoint>& points);

std::string read_file(const std::string& path);
// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace dmapar
