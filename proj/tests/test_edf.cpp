#include <cmath>

#include "doctest.h"
#include "somn/edf.hpp"
#include "somn/error.hpp"
#include "somn/rng.hpp"

using namespace somn;

namespace {

EdfHeader make_header(int n_records, std::vector<EdfSignalHeader> signals) {
  EdfHeader h;
  h.version = "0";
  h.patient_id = "X F X X";
  h.recording_id = "Startdate 01-JAN-2000 X X X";
  h.start_date = "01.01.00";
  h.start_time = "22.30.00";
  h.n_records = n_records;
  h.record_duration_s = 30.0;
  h.n_signals = static_cast<int>(signals.size());
  h.signals = std::move(signals);
  return h;
}

EdfSignalHeader eeg_signal(int samples_per_record) {
  EdfSignalHeader s;
  s.label = "EEG Fpz-Cz";
  s.transducer = "AgAgCl electrode";
  s.phys_dim = "uV";
  s.phys_min = -250.0;
  s.phys_max = 250.0;
  s.dig_min = -32768;
  s.dig_max = 32767;
  s.prefilter = "HP:0.5Hz LP:100Hz";
  s.samples_per_record = samples_per_record;
  return s;
}

}  // namespace

TEST_CASE("digital-to-physical linear map") {
  auto sig = eeg_signal(4);
  EdfHeader h = make_header(1, {sig});
  std::vector<std::vector<std::int16_t>> digital{{0, -32768, 32767, 100}};
  const auto bytes = write_edf(h, digital);
  const auto file = read_edf(bytes);

  const auto phys = file.physical(0);
  // (0 + 32768) * 500 / 65535 - 250
  CHECK(phys[0] == doctest::Approx(0.0038147).epsilon(1e-4));
  CHECK(phys[1] == doctest::Approx(-250.0));
  CHECK(phys[2] == doctest::Approx(250.0));
}

TEST_CASE("physical equals digital when ranges coincide") {
  auto sig = eeg_signal(3);
  sig.phys_min = -32768.0;
  sig.phys_max = 32767.0;
  EdfHeader h = make_header(1, {sig});
  std::vector<std::vector<std::int16_t>> digital{{-5, 0, 1234}};
  const auto file = read_edf(write_edf(h, digital));
  const auto phys = file.physical(0);
  CHECK(phys[0] == -5.0);
  CHECK(phys[1] == 0.0);
  CHECK(phys[2] == 1234.0);
}

TEST_CASE("write/read round-trip reproduces digital samples bit-exactly") {
  Rng rng(17);
  std::vector<EdfSignalHeader> sigs{eeg_signal(30), eeg_signal(10)};
  sigs[1].label = "EEG Pz-Oz";
  sigs[1].phys_min = -180.5;
  sigs[1].phys_max = 190.25;
  EdfHeader h = make_header(5, sigs);

  std::vector<std::vector<std::int16_t>> digital(2);
  digital[0].resize(150);
  digital[1].resize(50);
  for (auto& d : digital)
    for (auto& v : d) v = static_cast<std::int16_t>(rng.uniform_int(-32768, 32767));

  const auto file = read_edf(write_edf(h, digital));
  REQUIRE(file.digital.size() == 2);
  CHECK(file.digital[0] == digital[0]);
  CHECK(file.digital[1] == digital[1]);

  // Header numeric fields parse back to the written values.
  CHECK(file.header.n_records == 5);
  CHECK(file.header.record_duration_s == 30.0);
  CHECK(file.header.signals[1].phys_min == -180.5);
  CHECK(file.header.signals[1].phys_max == 190.25);
  CHECK(file.header.signals[0].dig_min == -32768);
  CHECK(file.header.signals[0].samples_per_record == 30);
  CHECK(file.header.header_bytes == 256 * 3);
}

TEST_CASE("file sizes follow the EDF layout arithmetic") {
  SUBCASE("no signals: header only") {
    EdfHeader h = make_header(0, {});
    CHECK(write_edf(h, {}).size() == 256);
  }
  SUBCASE("1 signal, 2 records x 3 samples") {
    EdfHeader h = make_header(2, {eeg_signal(3)});
    std::vector<std::vector<std::int16_t>> digital{{1, 2, 3, 4, 5, 6}};
    CHECK(write_edf(h, digital).size() == 256 * 2 + 2 * 3 * 2);
  }
}

TEST_CASE("inconsistent signal lengths are rejected") {
  EdfHeader h = make_header(2, {eeg_signal(3)});
  std::vector<std::vector<std::int16_t>> digital{{1, 2, 3}};  // needs 6
  try {
    write_edf(h, digital);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::inconsistent_lengths);
  }
}

TEST_CASE("malformed inputs are rejected") {
  SUBCASE("shorter than a header") {
    std::vector<std::uint8_t> tiny(100, ' ');
    CHECK_THROWS_AS(read_edf(tiny), Error);
  }
  SUBCASE("non-ASCII numeric field") {
    EdfHeader h = make_header(1, {eeg_signal(2)});
    auto bytes = write_edf(h, {{1, 2}});
    bytes[184] = 0xff;  // inside header_bytes field
    CHECK_THROWS_AS(read_edf(bytes), Error);
  }
  SUBCASE("wrong header_bytes") {
    EdfHeader h = make_header(1, {eeg_signal(2)});
    auto bytes = write_edf(h, {{1, 2}});
    bytes[184] = '9';
    CHECK_THROWS_AS(read_edf(bytes), Error);
  }
}

TEST_CASE("EDF+ annotation channels are skipped with a warning") {
  auto ann = eeg_signal(4);
  ann.label = "EDF Annotations";
  EdfHeader h = make_header(2, {eeg_signal(3), ann});
  std::vector<std::vector<std::int16_t>> digital{{1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 0, 0, 0}};
  const auto file = read_edf(write_edf(h, digital));
  CHECK(file.warnings.size() == 1);
  CHECK(file.digital[0] == digital[0]);
  CHECK(file.digital[1].empty());
}

TEST_CASE("hypnogram tokens map onto AASM with the R&K merge") {
  const auto stages = load_hypnogram("W\nS4\nREM\nMOVEMENT\nN4\nS1\nS2\nS3\nN2\nUNKNOWN\n");
  REQUIRE(stages.size() == 10);
  CHECK(stages[0] == SleepStage::W);
  CHECK(stages[1] == SleepStage::N3);
  CHECK(stages[2] == SleepStage::REM);
  CHECK(!stages[3].has_value());
  CHECK(stages[4] == SleepStage::N3);
  CHECK(stages[5] == SleepStage::N1);
  CHECK(stages[6] == SleepStage::N2);
  CHECK(stages[7] == SleepStage::N3);
  CHECK(stages[8] == SleepStage::N2);
  CHECK(!stages[9].has_value());

  try {
    load_hypnogram("W\nBOGUS\n");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_token);
  }
}

namespace {

DatasetManifest n_subject_manifest(int n) {
  DatasetManifest m;
  for (int i = 0; i < n; ++i) {
    const std::string id = "SC4" + std::to_string(100 + i);
    m.entries.push_back({id, id + ".edf", id + ".txt", "EEG Fpz-Cz"});
  }
  return m;
}

}  // namespace

TEST_CASE("subject split is 80/10/10 by count, disjoint, and seeded") {
  SUBCASE("10 subjects -> 8/1/1") {
    const auto split = subject_split(n_subject_manifest(10), 1);
    CHECK(split.train.entries.size() == 8);
    CHECK(split.val.entries.size() == 1);
    CHECK(split.test.entries.size() == 1);
  }
  SUBCASE("100 subjects -> 80/10/10") {
    const auto split = subject_split(n_subject_manifest(100), 2);
    CHECK(split.train.entries.size() == 80);
    CHECK(split.val.entries.size() == 10);
    CHECK(split.test.entries.size() == 10);
  }
  SUBCASE("same seed gives an identical partition; disjoint coverage") {
    const auto a = subject_split(n_subject_manifest(23), 77);
    const auto b = subject_split(n_subject_manifest(23), 77);
    CHECK(a.train.entries.size() == b.train.entries.size());
    std::set<std::string> seen;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
      for (const auto& e : part->entries) {
        CHECK(!seen.contains(e.subject_id));
        seen.insert(e.subject_id);
      }
    }
    CHECK(seen.size() == 23);
    for (std::size_t i = 0; i < a.val.entries.size(); ++i)
      CHECK(a.val.entries[i].subject_id == b.val.entries[i].subject_id);
  }
  SUBCASE("fewer than 3 subjects is an error") {
    try {
      subject_split(n_subject_manifest(2), 0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::too_few_subjects);
    }
  }
}

TEST_CASE("manifest CSV round-trips") {
  const auto m = n_subject_manifest(4);
  const auto parsed = parse_manifest(manifest_to_csv(m));
  REQUIRE(parsed.entries.size() == 4);
  CHECK(parsed.entries[2].subject_id == m.entries[2].subject_id);
  CHECK(parsed.entries[2].channel == "EEG Fpz-Cz");

  CHECK_THROWS_AS(parse_manifest("bad,header\n"), Error);
}
