#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ugraph/io.hpp"
#include "ugraph/wrench_sim.hpp"

namespace ugraph {

inline constexpr const char* kDatasetFormat = "ugraph.dataset.v1";

inline nlohmann::ordered_json record_to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["grasp_id"] = r.grasp_id;
  j["theta1"] = r.orientation.theta1;
  j["theta2"] = r.orientation.theta2;
  j["fx"] = r.wrench.force.x();
  j["fy"] = r.wrench.force.y();
  j["fz"] = r.wrench.force.z();
  j["tx"] = r.wrench.torque.x();
  j["ty"] = r.wrench.torque.y();
  j["tz"] = r.wrench.torque.z();
  j["dx"] = r.true_offset.x();
  j["dy"] = r.true_offset.y();
  j["dz"] = r.true_offset.z();
  j["mass_kg"] = r.mass;
  return j;
}

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  r.grasp_id = j.at("grasp_id").get<std::int64_t>();
  r.orientation = {j.at("theta1").get<double>(), j.at("theta2").get<double>()};
  r.wrench.force = {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("fz").get<double>()};
  r.wrench.torque = {j.at("tx").get<double>(), j.at("ty").get<double>(), j.at("tz").get<double>()};
  r.true_offset = {j.at("dx").get<double>(), j.at("dy").get<double>(), j.at("dz").get<double>()};
  r.mass = j.at("mass_kg").get<double>();
  return r;
}

/// Line-delimited JSON: one header object, then one object per record. LF endings.
inline std::string serialize_dataset(const nlohmann::ordered_json& header,
                                     const std::vector<DatasetRecord>& records) {
  std::string out;
  nlohmann::ordered_json h = header;
  h["format"] = kDatasetFormat;
  out += h.dump();
  out += '\n';
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& path, const nlohmann::ordered_json& header,
                          const std::vector<DatasetRecord>& records) {
  write_file_atomic(path, serialize_dataset(header, records));
}

struct LoadedDataset {
  nlohmann::json header;
  std::vector<DatasetRecord> records;
};

inline LoadedDataset parse_dataset(const std::string& text) {
  LoadedDataset ds;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset is empty (missing header line)");
  try {
    ds.header = nlohmann::json::parse(line);
    if (ds.header.value("format", "") != kDatasetFormat)
      throw IoError("unrecognized dataset format tag");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ds.records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed dataset: ") + e.what());
  }
  return ds;
}

inline LoadedDataset read_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

}  // namespace ugraph
