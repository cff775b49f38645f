#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "somn/signal.hpp"

namespace somn {

struct EdfSignalHeader {
  std::string label;        // 16 ASCII chars
  std::string transducer;   // 80
  std::string phys_dim;     // 8
  double phys_min = 0.0;    // 8
  double phys_max = 0.0;    // 8
  int dig_min = 0;          // 8
  int dig_max = 0;          // 8
  std::string prefilter;    // 80
  int samples_per_record = 0;  // 8
  std::string reserved;     // 32

  bool is_annotation() const { return label.rfind("EDF Annotations", 0) == 0; }
};

struct EdfHeader {
  std::string version;       // 8 ASCII chars
  std::string patient_id;    // 80
  std::string recording_id;  // 80
  std::string start_date;    // 8
  std::string start_time;    // 8
  int header_bytes = 0;      // 8
  std::string reserved;      // 44
  int n_records = 0;         // 8
  double record_duration_s = 0.0;  // 8
  int n_signals = 0;         // 4
  std::vector<EdfSignalHeader> signals;
};

struct EdfFile {
  EdfHeader header;
  // Digital samples per signal, record-deinterleaved. EDF+ annotation
  // channels are skipped (left empty) and reported in `warnings`.
  std::vector<std::vector<std::int16_t>> digital;
  std::vector<std::string> warnings;

  // physical = (digital - dig_min) * (phys_max - phys_min) / (dig_max - dig_min) + phys_min
  std::vector<double> physical(int signal) const;
};

EdfFile read_edf(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_edf(const EdfHeader& header,
                                    const std::vector<std::vector<std::int16_t>>& digital);

// Rounds physical values into the signal's digital range (clamped).
std::vector<std::int16_t> digitize(std::span<const double> physical, const EdfSignalHeader& sig);

// One stage token per line. Accepts AASM tokens (W, N1..N3, REM) and R&K
// tokens (S1..S4, N4) with the standard merge S3/S4/N4 -> N3. MOVEMENT and
// UNKNOWN yield nullopt: the epoch is excluded downstream together with its
// signal segment.
std::vector<std::optional<SleepStage>> load_hypnogram(std::string_view text);

struct ManifestEntry {
  std::string subject_id;
  std::string signal_path;
  std::string label_path;
  std::string channel;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// CSV with header "subject_id,signal_path,label_path,channel".
DatasetManifest parse_manifest(std::string_view csv_text);
std::string manifest_to_csv(const DatasetManifest& manifest);

struct SubjectPartition {
  std::vector<std::string> train, val, test;
};

// Shuffles unique subject ids by seed and partitions 80/10/10 by count:
// val and test each get ceil(n/10), the remainder goes to train.
SubjectPartition split_subject_ids(const std::vector<std::string>& unique_subjects,
                                   std::uint64_t seed);

struct SplitManifests {
  DatasetManifest train, val, test;
};

SplitManifests subject_split(const DatasetManifest& manifest, std::uint64_t seed);

}  // namespace somn
