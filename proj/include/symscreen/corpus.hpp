// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symscreen/date.hpp"
#include "symscreen/text.hpp"

namespace symscreen {

enum class Gender { F, M, other };

std::string to_string(Gender g);
Gender parse_gender(std::string_view s);

struct Patient {
  std::string patient_id;
  Date birth_date;
  Gender gender = Gender::other;
  bool is_case = false;
  std::optional<Date> diagnosis_date;  ///< required when is_case

  friend bool operator==(const Patient&, const Patient&) = default;
};

struct Note {
  std::string note_id;
  std::string patient_id;
  Date date;
  std::string department;
  std::string text;

  friend bool operator==(const Note&, const Note&) = default;
};

using Span = text::ByteRange;

/// Adjudicated note-level truth for one (note, category) pair.
struct GoldLabel {
  std::string note_id;
  std::string category_id;
  bool present = false;
  std::vector<Span> evidence;

  friend bool operator==(const GoldLabel&, const GoldLabel&) = default;
};

/// Patients, notes and optional gold labels with referential integrity checked
/// at construction. Immutable afterwards, so safe to share across readers.
class Corpus {
 public:
  Corpus() = default;
  /// Throws ValidationError on duplicate ids, blank note text, a case patient
  /// without a diagnosis date, or dangling references (listing offending ids).
  Corpus(std::vector<Patient> patients, std::vector<Note> notes, std::vector<GoldLabel> gold = {});

  [[nodiscard]] const std::vector<Patient>& patients() const { return patients_; }
  [[nodiscard]] const std::vector<Note>& notes() const { return notes_; }
  [[nodiscard]] const std::vector<GoldLabel>& gold() const { return gold_; }

  [[nodiscard]] const Patient* find_patient(std::string_view id) const;
  [[nodiscard]] const Note* find_note(std::string_view id) const;
  /// Indices into notes() for one patient, in corpus order.
  [[nodiscard]] std::span<const std::size_t> notes_of(std::string_view patient_id) const;
  [[nodiscard]] const GoldLabel* find_gold(std::string_view note_id, std::string_view category_id) const;

 private:
  std::vector<Patient> patients_;
  std::vector<Note> notes_;
  std::vector<GoldLabel> gold_;
  std::map<std::string, std::size_t, std::less<>> patient_index_;
  std::map<std::string, std::size_t, std::less<>> note_index_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> notes_by_patient_;
  std::map<std::pair<std::string, std::string>, std::size_t> gold_index_;
};

// Line-delimited readers. Blank lines are skipped; a malformed line throws
// ValidationError naming `source` and the 1-based line number.
std::vector<Patient> read_patients(std::istream& in, std::string_view source = "patients.jsonl");
std::vector<Note> read_notes(std::istream& in, std::string_view source = "notes.jsonl");
std::vector<GoldLabel> read_gold(std::istream& in, std::string_view source = "gold.jsonl");

void write_patients(std::ostream& out, std::span<const Patient> patients);
void write_notes(std::ostream& out, std::span<const Note> notes);
void write_gold(std::ostream& out, std::span<const GoldLabel> gold);

std::string gold_to_jsonl(std::span<const GoldLabel> gold);

/// Reads patients.jsonl, notes.jsonl and, when present, gold.jsonl from `dir`.
Corpus ingest(const std::filesystem::path& dir);
/// Writes the three files; gold.jsonl is written only when the corpus has labels.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace symscreen
