#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "respkit/audio/augment.hpp"
#include "respkit/core/error.hpp"
#include "respkit/core/io.hpp"
#include "respkit/dataset/meta.hpp"

#include <json.hpp>

namespace respkit::dataset {

enum class Provenance : uint8_t { original = 0, augmented = 1 };

/// One recording (or one derived variant of a recording) in the corpus. `id`
/// is the unique key used by the feature cache: the filename stem for
/// originals, stem#augN for derived variants.
struct DatasetEntry {
  std::string id;
  std::string audio_path;
  std::string annotation_path;  // empty when no annotation file exists
  RecordingMeta meta;
  Diagnosis diagnosis = Diagnosis::Healthy;
  BinaryLabel binary_label = BinaryLabel::non_copd;
  Provenance provenance = Provenance::original;
  std::optional<audio::AugmentationSpec> augmentation;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;

  size_t count_label(BinaryLabel l) const {
    size_t n = 0;
    for (const auto& e : entries)
      if (e.binary_label == l) ++n;
    return n;
  }
};

/// Scan an ICBHI-layout directory: *.wav recordings with sibling *.txt
/// annotations and one diagnosis table (filename containing "diagnosis").
/// Entries come back sorted by audio path.
inline DatasetIndex build_index(const std::filesystem::path& dataset_dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dataset_dir), errc::empty_dataset,
          "not a directory: " + dataset_dir.string());

  std::vector<fs::path> wavs;
  std::optional<fs::path> table_path;
  for (const auto& de : fs::recursive_directory_iterator(dataset_dir)) {
    if (!de.is_regular_file()) continue;
    const fs::path& p = de.path();
    std::string name = p.filename().string();
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (p.extension() == ".wav") {
      wavs.push_back(p);
    } else if (lower.find("diagnosis") != std::string::npos) {
      require(!table_path.has_value(), errc::missing_diagnosis_table,
              "multiple diagnosis tables found");
      table_path = p;
    }
  }
  require(table_path.has_value(), errc::missing_diagnosis_table,
          "no diagnosis table in " + dataset_dir.string());
  require(!wavs.empty(), errc::empty_dataset, "no .wav files in " + dataset_dir.string());
  std::sort(wavs.begin(), wavs.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  const auto table = parse_diagnosis_table(*table_path);

  DatasetIndex index;
  std::set<std::string> seen_ids;
  for (const fs::path& wav : wavs) {
    DatasetEntry e;
    e.meta = parse_recording_filename(wav.stem().string());
    const auto it = table.find(e.meta.patient_id);
    require(it != table.end(), errc::unknown_patient,
            "patient " + std::to_string(e.meta.patient_id) + " missing from diagnosis table");
    e.id = wav.stem().string();
    e.audio_path = wav.generic_string();
    const fs::path ann = fs::path(wav).replace_extension(".txt");
    e.annotation_path = fs::exists(ann) ? ann.generic_string() : std::string();
    e.diagnosis = it->second;
    e.binary_label = binary_label_of(e.diagnosis);
    e.provenance = Provenance::original;
    require(seen_ids.insert(e.id).second, errc::invalid_spec,
            "duplicate recording stem: " + e.id);
    index.entries.push_back(std::move(e));
  }
  return index;
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace detail

inline std::string entry_to_json_line(const DatasetEntry& e) {
  std::ostringstream os;
  os << "{\"id\":\"" << detail::json_escape(e.id) << "\""
     << ",\"audio\":\"" << detail::json_escape(e.audio_path) << "\""
     << ",\"annotation\":\"" << detail::json_escape(e.annotation_path) << "\""
     << ",\"patient\":" << e.meta.patient_id
     << ",\"recording\":\"" << detail::json_escape(e.meta.recording_index) << "\""
     << ",\"location\":\"" << chest_location_token(e.meta.chest_location) << "\""
     << ",\"mode\":\"" << acquisition_mode_token(e.meta.acquisition_mode) << "\""
     << ",\"equipment\":\"" << detail::json_escape(e.meta.equipment) << "\""
     << ",\"diagnosis\":\"" << diagnosis_name(e.diagnosis) << "\""
     << ",\"label\":\"" << (e.binary_label == BinaryLabel::copd ? "copd" : "non_copd") << "\""
     << ",\"provenance\":\""
     << (e.provenance == Provenance::original ? "original" : "augmented") << "\"";
  if (e.augmentation.has_value()) {
    os << ",\"augment\":{\"method\":\"" << audio::augment_method_name(e.augmentation->method)
       << "\",\"magnitude\":" << format_f6(e.augmentation->magnitude)
       << ",\"seed\":" << e.augmentation->seed << "}";
  }
  os << "}";
  return os.str();
}

/// Manifest: one JSON object per line, sorted by audio path (stable and
/// diff-friendly).
inline void write_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
  std::vector<const DatasetEntry*> order;
  order.reserve(index.entries.size());
  for (const auto& e : index.entries) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const DatasetEntry* a, const DatasetEntry* b) {
    return a->audio_path != b->audio_path ? a->audio_path < b->audio_path : a->id < b->id;
  });
  std::string out;
  for (const DatasetEntry* e : order) {
    out += entry_to_json_line(*e);
    out += '\n';
  }
  write_file_text(path, out);
}

inline DatasetIndex read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  DatasetIndex index;
  std::istringstream lines(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& ex) {
      raise(errc::malformed_row,
            "manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
    try {
      DatasetEntry e;
      e.id = j.at("id").get<std::string>();
      e.audio_path = j.at("audio").get<std::string>();
      e.annotation_path = j.at("annotation").get<std::string>();
      e.meta.patient_id = j.at("patient").get<uint32_t>();
      e.meta.recording_index = j.at("recording").get<std::string>();
      const std::string stem = std::to_string(e.meta.patient_id) + "_" +
                               e.meta.recording_index + "_" +
                               j.at("location").get<std::string>() + "_" +
                               j.at("mode").get<std::string>() + "_" +
                               j.at("equipment").get<std::string>();
      e.meta = parse_recording_filename(stem);
      const std::string diag = j.at("diagnosis").get<std::string>();
      bool found = false;
      for (Diagnosis d : {Diagnosis::COPD, Diagnosis::Healthy, Diagnosis::URTI,
                          Diagnosis::Bronchiectasis, Diagnosis::Pneumonia,
                          Diagnosis::Bronchiolitis, Diagnosis::LRTI, Diagnosis::Asthma}) {
        if (diag == diagnosis_name(d)) {
          e.diagnosis = d;
          found = true;
          break;
        }
      }
      require(found, errc::malformed_row, "unknown diagnosis in manifest: " + diag);
      e.binary_label = binary_label_of(e.diagnosis);
      e.provenance = j.at("provenance").get<std::string>() == "augmented"
                         ? Provenance::augmented
                         : Provenance::original;
      if (j.contains("augment")) {
        audio::AugmentationSpec spec;
        const std::string m = j["augment"].at("method").get<std::string>();
        if (m == "time_shift") spec.method = audio::AugmentMethod::time_shift;
        else if (m == "additive_noise") spec.method = audio::AugmentMethod::additive_noise;
        else if (m == "time_stretch") spec.method = audio::AugmentMethod::time_stretch;
        else raise(errc::malformed_row, "unknown augment method in manifest: " + m);
        spec.magnitude = j["augment"].at("magnitude").get<double>();
        spec.seed = j["augment"].at("seed").get<uint64_t>();
        e.augmentation = spec;
      }
      index.entries.push_back(std::move(e));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      raise(errc::malformed_row,
            "manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return index;
}

}  // namespace respkit::dataset
