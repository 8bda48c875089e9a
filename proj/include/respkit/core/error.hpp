#pragma once

#include <stdexcept>
#include <string>

namespace respkit {

enum class errc {
  malformed_filename,
  malformed_row,
  conflicting_diagnosis,
  unknown_patient,
  missing_diagnosis_table,
  unsupported_encoding,
  corrupt_file,
  io_error,
  too_few_entries,
  invalid_k,
  invalid_spec,
  invalid_config,
  empty_clip,
  empty_dataset,
  empty_input,
  invalid_band,
  negative_input,
  shape_violation,
  shape_mismatch,
  batch_too_small,
  invalid_label,
  no_matches,
  length_mismatch,
  single_class,
  corrupt_model,
  version_mismatch,
  cache_locked,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::malformed_filename: return "MalformedFilename";
    case errc::malformed_row: return "MalformedRow";
    case errc::conflicting_diagnosis: return "ConflictingDiagnosis";
    case errc::unknown_patient: return "UnknownPatient";
    case errc::missing_diagnosis_table: return "MissingDiagnosisTable";
    case errc::unsupported_encoding: return "UnsupportedEncoding";
    case errc::corrupt_file: return "CorruptFile";
    case errc::io_error: return "IoError";
    case errc::too_few_entries: return "TooFewEntries";
    case errc::invalid_k: return "InvalidK";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::invalid_config: return "InvalidConfig";
    case errc::empty_clip: return "EmptyClip";
    case errc::empty_dataset: return "EmptyDataset";
    case errc::empty_input: return "EmptyInput";
    case errc::invalid_band: return "InvalidBand";
    case errc::negative_input: return "NegativeInput";
    case errc::shape_violation: return "ShapeViolation";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::batch_too_small: return "BatchTooSmall";
    case errc::invalid_label: return "InvalidLabel";
    case errc::no_matches: return "NoMatches";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::single_class: return "SingleClass";
    case errc::corrupt_model: return "CorruptModel";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::cache_locked: return "CacheLocked";
  }
  return "Unknown";
}

/// Exception type carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace respkit
