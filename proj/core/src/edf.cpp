#include "somn/edf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "somn/csv.hpp"
#include "somn/error.hpp"
#include "somn/rng.hpp"

namespace somn {

namespace {

constexpr int kMainHeaderBytes = 256;
constexpr int kSignalHeaderBytes = 256;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
    --e;
  return std::string(s.substr(b, e - b));
}

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::string take(std::size_t n) {
    require(pos + n <= bytes.size(), errc::malformed, "EDF truncated inside header");
    std::string out(reinterpret_cast<const char*>(bytes.data() + pos), n);
    for (char c : out) {
      require(static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f,
              errc::malformed, "non-ASCII byte in EDF header field");
    }
    pos += n;
    return out;
  }
};

int parse_int(const std::string& raw, const char* what) {
  const std::string s = trim(raw);
  require(!s.empty(), errc::malformed, std::string("empty numeric field: ") + what);
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(s, &used);
  } catch (const std::exception&) {
    raise(errc::malformed, std::string("bad integer field: ") + what + " = '" + s + "'");
  }
  require(used == s.size(), errc::malformed,
          std::string("trailing junk in integer field: ") + what);
  return value;
}

double parse_double(const std::string& raw, const char* what) {
  const std::string s = trim(raw);
  require(!s.empty(), errc::malformed, std::string("empty numeric field: ") + what);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    raise(errc::malformed, std::string("bad real field: ") + what + " = '" + s + "'");
  }
  require(used == s.size(), errc::malformed, std::string("trailing junk in real field: ") + what);
  return value;
}

// Formats a value into a fixed-width space-padded ASCII field; reals drop
// precision until they fit.
std::string pad_field(std::string s, std::size_t width, const char* what) {
  require(s.size() <= width, errc::invalid_config,
          std::string("EDF field too long: ") + what + " = '" + s + "'");
  s.resize(width, ' ');
  return s;
}

std::string format_real(double value, std::size_t width, const char* what) {
  for (int precision = 10; precision >= 1; --precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strlen(buf) <= width) return buf;
  }
  raise(errc::invalid_config, std::string("cannot format real into EDF field: ") + what);
}

}  // namespace

std::vector<double> EdfFile::physical(int signal) const {
  const auto& sig = header.signals.at(static_cast<std::size_t>(signal));
  const auto& dig = digital.at(static_cast<std::size_t>(signal));
  const double gain =
      (sig.phys_max - sig.phys_min) / (static_cast<double>(sig.dig_max) - sig.dig_min);
  std::vector<double> out(dig.size());
  for (std::size_t i = 0; i < dig.size(); ++i) {
    out[i] = (static_cast<double>(dig[i]) - sig.dig_min) * gain + sig.phys_min;
  }
  return out;
}

EdfFile read_edf(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kMainHeaderBytes, errc::malformed, "EDF shorter than 256 bytes");

  EdfFile file;
  EdfHeader& h = file.header;
  Cursor cur{bytes};

  h.version = cur.take(8);
  h.patient_id = cur.take(80);
  h.recording_id = cur.take(80);
  h.start_date = cur.take(8);
  h.start_time = cur.take(8);
  h.header_bytes = parse_int(cur.take(8), "header_bytes");
  h.reserved = cur.take(44);
  h.n_records = parse_int(cur.take(8), "n_records");
  h.record_duration_s = parse_double(cur.take(8), "record_duration");
  h.n_signals = parse_int(cur.take(4), "n_signals");

  require(h.n_signals >= 0, errc::malformed, "negative signal count");
  require(h.header_bytes == kMainHeaderBytes * (1 + h.n_signals), errc::malformed,
          "header_bytes does not equal 256*(1+n_signals)");
  require(bytes.size() >= static_cast<std::size_t>(h.header_bytes), errc::malformed,
          "EDF truncated before end of signal headers");

  const int ns = h.n_signals;
  h.signals.resize(static_cast<std::size_t>(ns));
  for (auto& s : h.signals) s.label = trim(cur.take(16));
  for (auto& s : h.signals) s.transducer = trim(cur.take(80));
  for (auto& s : h.signals) s.phys_dim = trim(cur.take(8));
  for (auto& s : h.signals) s.phys_min = parse_double(cur.take(8), "phys_min");
  for (auto& s : h.signals) s.phys_max = parse_double(cur.take(8), "phys_max");
  for (auto& s : h.signals) s.dig_min = parse_int(cur.take(8), "dig_min");
  for (auto& s : h.signals) s.dig_max = parse_int(cur.take(8), "dig_max");
  for (auto& s : h.signals) s.prefilter = trim(cur.take(80));
  for (auto& s : h.signals) s.samples_per_record = parse_int(cur.take(8), "samples_per_record");
  for (auto& s : h.signals) s.reserved = trim(cur.take(32));

  std::size_t record_values = 0;
  for (const auto& s : h.signals) {
    require(s.samples_per_record >= 0, errc::malformed, "negative samples_per_record");
    if (!s.is_annotation()) {
      require(s.dig_min < s.dig_max, errc::malformed, "dig_min must be < dig_max");
      require(s.phys_min != s.phys_max, errc::malformed, "phys_min must differ from phys_max");
    }
    record_values += static_cast<std::size_t>(s.samples_per_record);
  }

  const std::size_t data_bytes = bytes.size() - static_cast<std::size_t>(h.header_bytes);
  const std::size_t record_bytes = record_values * 2;
  if (h.n_records < 0) {
    // n_records may be -1 for interrupted recordings; infer from file size.
    require(record_bytes > 0, errc::malformed, "cannot infer record count");
    h.n_records = static_cast<int>(data_bytes / record_bytes);
  }
  require(data_bytes >= static_cast<std::size_t>(h.n_records) * record_bytes, errc::malformed,
          "EDF data shorter than n_records");

  file.digital.resize(static_cast<std::size_t>(ns));
  for (int s = 0; s < ns; ++s) {
    if (h.signals[static_cast<std::size_t>(s)].is_annotation()) {
      file.warnings.push_back("skipping EDF+ annotations channel at index " + std::to_string(s));
      continue;
    }
    file.digital[static_cast<std::size_t>(s)].reserve(
        static_cast<std::size_t>(h.n_records) *
        static_cast<std::size_t>(h.signals[static_cast<std::size_t>(s)].samples_per_record));
  }

  const std::uint8_t* p = bytes.data() + h.header_bytes;
  for (int r = 0; r < h.n_records; ++r) {
    for (int s = 0; s < ns; ++s) {
      const auto& sig = h.signals[static_cast<std::size_t>(s)];
      const int spr = sig.samples_per_record;
      if (sig.is_annotation()) {
        p += spr * 2;
        continue;
      }
      auto& dst = file.digital[static_cast<std::size_t>(s)];
      for (int i = 0; i < spr; ++i) {
        const auto lo = static_cast<std::uint16_t>(p[0]);
        const auto hi = static_cast<std::uint16_t>(p[1]);
        dst.push_back(static_cast<std::int16_t>(lo | (hi << 8)));
        p += 2;
      }
    }
  }
  return file;
}

std::vector<std::uint8_t> write_edf(const EdfHeader& header,
                                    const std::vector<std::vector<std::int16_t>>& digital) {
  require(header.signals.size() == digital.size(), errc::inconsistent_lengths,
          "signal count mismatch between header and data");
  const int ns = static_cast<int>(header.signals.size());
  for (int s = 0; s < ns; ++s) {
    const auto& sig = header.signals[static_cast<std::size_t>(s)];
    const std::size_t expect = static_cast<std::size_t>(header.n_records) *
                               static_cast<std::size_t>(sig.samples_per_record);
    require(digital[static_cast<std::size_t>(s)].size() == expect, errc::inconsistent_lengths,
            "signal " + std::to_string(s) + " length != n_records * samples_per_record");
  }

  std::string head;
  head += pad_field(header.version.empty() ? "0" : header.version, 8, "version");
  head += pad_field(header.patient_id, 80, "patient_id");
  head += pad_field(header.recording_id, 80, "recording_id");
  head += pad_field(header.start_date.empty() ? "01.01.00" : header.start_date, 8, "start_date");
  head += pad_field(header.start_time.empty() ? "00.00.00" : header.start_time, 8, "start_time");
  head += pad_field(std::to_string(kMainHeaderBytes * (1 + ns)), 8, "header_bytes");
  head += pad_field(header.reserved, 44, "reserved");
  head += pad_field(std::to_string(header.n_records), 8, "n_records");
  head += pad_field(format_real(header.record_duration_s, 8, "record_duration"), 8,
                    "record_duration");
  head += pad_field(std::to_string(ns), 4, "n_signals");

  for (const auto& s : header.signals) head += pad_field(s.label, 16, "label");
  for (const auto& s : header.signals) head += pad_field(s.transducer, 80, "transducer");
  for (const auto& s : header.signals) head += pad_field(s.phys_dim, 8, "phys_dim");
  for (const auto& s : header.signals)
    head += pad_field(format_real(s.phys_min, 8, "phys_min"), 8, "phys_min");
  for (const auto& s : header.signals)
    head += pad_field(format_real(s.phys_max, 8, "phys_max"), 8, "phys_max");
  for (const auto& s : header.signals)
    head += pad_field(std::to_string(s.dig_min), 8, "dig_min");
  for (const auto& s : header.signals)
    head += pad_field(std::to_string(s.dig_max), 8, "dig_max");
  for (const auto& s : header.signals) head += pad_field(s.prefilter, 80, "prefilter");
  for (const auto& s : header.signals)
    head += pad_field(std::to_string(s.samples_per_record), 8, "samples_per_record");
  for (const auto& s : header.signals) head += pad_field(s.reserved, 32, "reserved");

  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (int r = 0; r < header.n_records; ++r) {
    for (int s = 0; s < ns; ++s) {
      const int spr = header.signals[static_cast<std::size_t>(s)].samples_per_record;
      const auto& src = digital[static_cast<std::size_t>(s)];
      for (int i = 0; i < spr; ++i) {
        const auto v = static_cast<std::uint16_t>(src[static_cast<std::size_t>(r) * spr + i]);
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
      }
    }
  }
  return out;
}

std::vector<std::int16_t> digitize(std::span<const double> physical, const EdfSignalHeader& sig) {
  const double gain =
      (static_cast<double>(sig.dig_max) - sig.dig_min) / (sig.phys_max - sig.phys_min);
  std::vector<std::int16_t> out(physical.size());
  for (std::size_t i = 0; i < physical.size(); ++i) {
    double d = std::round((physical[i] - sig.phys_min) * gain + sig.dig_min);
    d = std::clamp(d, static_cast<double>(sig.dig_min), static_cast<double>(sig.dig_max));
    out[i] = static_cast<std::int16_t>(d);
  }
  return out;
}

std::vector<std::optional<SleepStage>> load_hypnogram(std::string_view text) {
  std::vector<std::optional<SleepStage>> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string token = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (token.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (token == "W") out.emplace_back(SleepStage::W);
    else if (token == "N1" || token == "S1") out.emplace_back(SleepStage::N1);
    else if (token == "N2" || token == "S2") out.emplace_back(SleepStage::N2);
    else if (token == "N3" || token == "N4" || token == "S3" || token == "S4")
      out.emplace_back(SleepStage::N3);
    else if (token == "REM") out.emplace_back(SleepStage::REM);
    else if (token == "MOVEMENT" || token == "UNKNOWN") out.emplace_back(std::nullopt);
    else
      raise(errc::unknown_token,
            "unknown stage token '" + token + "' on line " + std::to_string(line_no));
    if (pos > text.size()) break;
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view csv_text) {
  const auto rows = parse_csv(csv_text);
  require(!rows.empty(), errc::malformed, "empty manifest");
  const auto& head = rows.front();
  require(head.size() == 4 && head[0] == "subject_id" && head[1] == "signal_path" &&
              head[2] == "label_path" && head[3] == "channel",
          errc::malformed, "manifest header must be subject_id,signal_path,label_path,channel");
  DatasetManifest m;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    require(rows[i].size() == 4, errc::malformed,
            "manifest row " + std::to_string(i) + " must have 4 fields");
    m.entries.push_back({rows[i][0], rows[i][1], rows[i][2], rows[i][3]});
  }
  return m;
}

std::string manifest_to_csv(const DatasetManifest& manifest) {
  CsvWriter w;
  w.row({"subject_id", "signal_path", "label_path", "channel"});
  for (const auto& e : manifest.entries) w.row({e.subject_id, e.signal_path, e.label_path, e.channel});
  return w.str();
}

SubjectPartition split_subject_ids(const std::vector<std::string>& unique_subjects,
                                   std::uint64_t seed) {
  std::vector<std::string> ids = unique_subjects;
  require(ids.size() >= 3, errc::too_few_subjects,
          "need at least 3 distinct subjects, got " + std::to_string(ids.size()));
  Rng rng(seed);
  deterministic_shuffle(ids, rng);

  const std::size_t n = ids.size();
  const std::size_t holdout = (n + 9) / 10;  // ceil(n/10) each for val and test
  const std::size_t train_n = n - 2 * holdout;

  SubjectPartition part;
  part.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
  part.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n),
                  ids.begin() + static_cast<std::ptrdiff_t>(train_n + holdout));
  part.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n + holdout), ids.end());
  return part;
}

SplitManifests subject_split(const DatasetManifest& manifest, std::uint64_t seed) {
  std::vector<std::string> unique;
  for (const auto& e : manifest.entries) {
    if (std::find(unique.begin(), unique.end(), e.subject_id) == unique.end())
      unique.push_back(e.subject_id);
  }
  const SubjectPartition part = split_subject_ids(unique, seed);

  auto contains = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  SplitManifests out;
  for (const auto& e : manifest.entries) {
    if (contains(part.train, e.subject_id)) out.train.entries.push_back(e);
    else if (contains(part.val, e.subject_id)) out.val.entries.push_back(e);
    else out.test.entries.push_back(e);
  }
  return out;
}

}  // namespace somn
