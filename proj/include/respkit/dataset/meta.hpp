#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"
#include "respkit/core/io.hpp"

namespace respkit::dataset {

enum class ChestLocation : uint8_t { Tc, Al, Ar, Pl, Pr, Ll, Lr };
enum class AcquisitionMode : uint8_t { single_channel, multi_channel };
enum class Diagnosis : uint8_t {
  COPD,
  Healthy,
  URTI,
  Bronchiectasis,
  Pneumonia,
  Bronchiolitis,
  LRTI,
  Asthma
};
enum class BinaryLabel : uint8_t { non_copd = 0, copd = 1 };

inline const char* chest_location_token(ChestLocation v) {
  switch (v) {
    case ChestLocation::Tc: return "Tc";
    case ChestLocation::Al: return "Al";
    case ChestLocation::Ar: return "Ar";
    case ChestLocation::Pl: return "Pl";
    case ChestLocation::Pr: return "Pr";
    case ChestLocation::Ll: return "Ll";
    case ChestLocation::Lr: return "Lr";
  }
  return "?";
}

inline const char* acquisition_mode_token(AcquisitionMode v) {
  return v == AcquisitionMode::single_channel ? "sc" : "mc";
}

inline const char* diagnosis_name(Diagnosis d) {
  switch (d) {
    case Diagnosis::COPD: return "COPD";
    case Diagnosis::Healthy: return "Healthy";
    case Diagnosis::URTI: return "URTI";
    case Diagnosis::Bronchiectasis: return "Bronchiectasis";
    case Diagnosis::Pneumonia: return "Pneumonia";
    case Diagnosis::Bronchiolitis: return "Bronchiolitis";
    case Diagnosis::LRTI: return "LRTI";
    case Diagnosis::Asthma: return "Asthma";
  }
  return "?";
}

inline BinaryLabel binary_label_of(Diagnosis d) {
  return d == Diagnosis::COPD ? BinaryLabel::copd : BinaryLabel::non_copd;
}

/// Metadata encoded in a recording's filename stem,
/// patient_recordingindex_location_mode_equipment (e.g. 101_1b1_Al_sc_Meditron).
struct RecordingMeta {
  uint32_t patient_id = 0;
  std::string recording_index;
  ChestLocation chest_location = ChestLocation::Tc;
  AcquisitionMode acquisition_mode = AcquisitionMode::single_channel;
  std::string equipment;

  std::string stem() const {
    return std::to_string(patient_id) + "_" + recording_index + "_" +
           chest_location_token(chest_location) + "_" +
           acquisition_mode_token(acquisition_mode) + "_" + equipment;
  }
};

struct CycleAnnotation {
  double start_seconds = 0.0;
  double end_seconds = 0.0;
  bool crackles = false;
  bool wheezes = false;
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    const size_t nxt = s.find(sep, pos);
    if (nxt == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, nxt - pos));
    pos = nxt + 1;
  }
}

inline bool parse_u32(const std::string& tok, uint32_t& out) {
  if (tok.empty() || tok.size() > 9) return false;
  uint32_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<uint32_t>(c - '0');
  }
  out = v;
  return true;
}

inline bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  size_t consumed = 0;
  try {
    out = std::stod(tok, &consumed);
  } catch (...) {
    return false;
  }
  return consumed == tok.size();
}

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

inline RecordingMeta parse_recording_filename(const std::string& stem) {
  const auto parts = detail::split_on(stem, '_');
  require(parts.size() == 5, errc::malformed_filename,
          "expected 5 underscore-separated fields in '" + stem + "'");

  RecordingMeta meta;
  require(detail::parse_u32(parts[0], meta.patient_id) && meta.patient_id > 0,
          errc::malformed_filename, "patient id is not a positive integer in '" + stem + "'");
  require(!parts[1].empty(), errc::malformed_filename, "empty recording index in '" + stem + "'");
  meta.recording_index = parts[1];

  bool found = false;
  for (ChestLocation loc : {ChestLocation::Tc, ChestLocation::Al, ChestLocation::Ar,
                            ChestLocation::Pl, ChestLocation::Pr, ChestLocation::Ll,
                            ChestLocation::Lr}) {
    if (parts[2] == chest_location_token(loc)) {
      meta.chest_location = loc;
      found = true;
      break;
    }
  }
  require(found, errc::malformed_filename, "unknown chest location '" + parts[2] + "'");

  if (parts[3] == "sc") meta.acquisition_mode = AcquisitionMode::single_channel;
  else if (parts[3] == "mc") meta.acquisition_mode = AcquisitionMode::multi_channel;
  else raise(errc::malformed_filename, "unknown acquisition mode '" + parts[3] + "'");

  require(!parts[4].empty(), errc::malformed_filename, "empty equipment field in '" + stem + "'");
  meta.equipment = parts[4];
  return meta;
}

/// Annotation rows: "start end crackles wheezes", whitespace-separated, in
/// file order. An empty file is a valid empty cycle list.
inline std::vector<CycleAnnotation> parse_cycle_annotations(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  std::vector<CycleAnnotation> cycles;
  std::istringstream lines(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::istringstream row(t);
    std::string f0, f1, f2, f3, extra;
    row >> f0 >> f1 >> f2 >> f3;
    const bool has_extra = static_cast<bool>(row >> extra);
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    require(!f3.empty() && !has_extra, errc::malformed_row,
            "expected 4 fields at " + where);
    CycleAnnotation c;
    require(detail::parse_double(f0, c.start_seconds) && detail::parse_double(f1, c.end_seconds),
            errc::malformed_row, "non-numeric cycle bounds at " + where);
    require(c.start_seconds >= 0.0 && c.start_seconds < c.end_seconds, errc::malformed_row,
            "cycle bounds must satisfy 0 <= start < end at " + where);
    require(f2 == "0" || f2 == "1", errc::malformed_row, "crackle flag not 0/1 at " + where);
    require(f3 == "0" || f3 == "1", errc::malformed_row, "wheeze flag not 0/1 at " + where);
    c.crackles = f2 == "1";
    c.wheezes = f3 == "1";
    cycles.push_back(c);
  }
  return cycles;
}

/// Diagnosis table rows: "id,diagnosis" or "id<TAB>diagnosis". Duplicate rows
/// must agree; disagreement is an error, not last-writer-wins.
inline std::map<uint32_t, Diagnosis> parse_diagnosis_table(const std::filesystem::path& path) {
  const std::string text = read_file_text(path);
  std::map<uint32_t, Diagnosis> table;
  std::istringstream lines(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);

    size_t sep = t.find(',');
    if (sep == std::string::npos) sep = t.find('\t');
    require(sep != std::string::npos, errc::malformed_row,
            "expected 'id,diagnosis' or tab-separated at " + where);

    uint32_t id = 0;
    require(detail::parse_u32(detail::trim(t.substr(0, sep)), id) && id > 0,
            errc::malformed_row, "patient id is not a positive integer at " + where);

    const std::string name = detail::trim(t.substr(sep + 1));
    bool found = false;
    Diagnosis diag = Diagnosis::Healthy;
    for (Diagnosis d : {Diagnosis::COPD, Diagnosis::Healthy, Diagnosis::URTI,
                        Diagnosis::Bronchiectasis, Diagnosis::Pneumonia,
                        Diagnosis::Bronchiolitis, Diagnosis::LRTI, Diagnosis::Asthma}) {
      if (name == diagnosis_name(d)) {
        diag = d;
        found = true;
        break;
      }
    }
    require(found, errc::malformed_row, "unknown diagnosis '" + name + "' at " + where);

    const auto it = table.find(id);
    if (it != table.end()) {
      require(it->second == diag, errc::conflicting_diagnosis,
              "patient " + std::to_string(id) + " has conflicting diagnoses");
    } else {
      table.emplace(id, diag);
    }
  }
  return table;
}

}  // namespace respkit::dataset
