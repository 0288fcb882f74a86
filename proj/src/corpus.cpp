// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "symscreen/error.hpp"
#include "symscreen/json_io.hpp"

namespace symscreen {

using jsonl::Json;

std::string to_string(Gender g) {
  switch (g) {
    case Gender::F: return "F";
    case Gender::M: return "M";
    case Gender::other: return "O";
  }
  return "O";
}

Gender parse_gender(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  if (s == "O") return Gender::other;
  throw ValidationError("invalid gender '" + std::string(s) + "'");
}

Corpus::Corpus(std::vector<Patient> patients, std::vector<Note> notes, std::vector<GoldLabel> gold)
    : patients_(std::move(patients)), notes_(std::move(notes)), gold_(std::move(gold)) {
  for (std::size_t i = 0; i < patients_.size(); ++i) {
    const Patient& p = patients_[i];
    if (p.patient_id.empty()) throw ValidationError("patient with empty patient_id");
    if (p.is_case && !p.diagnosis_date) {
      throw ValidationError("case patient '" + p.patient_id + "' has no diagnosis_date");
    }
    if (!patient_index_.emplace(p.patient_id, i).second) {
      throw ValidationError("duplicate patient_id '" + p.patient_id + "'");
    }
  }

  std::vector<std::string> dangling;
  for (std::size_t i = 0; i < notes_.size(); ++i) {
    const Note& n = notes_[i];
    if (n.note_id.empty()) throw ValidationError("note with empty note_id");
    if (text::is_blank(n.text)) throw ValidationError("note '" + n.note_id + "' has blank text");
    if (!note_index_.emplace(n.note_id, i).second) {
      throw ValidationError("duplicate note_id '" + n.note_id + "'");
    }
    if (!patient_index_.contains(n.patient_id)) {
      dangling.push_back(n.note_id);
      continue;
    }
    notes_by_patient_[n.patient_id].push_back(i);
  }
  if (!dangling.empty()) {
    std::string msg = "notes reference unknown patients:";
    for (const auto& id : dangling) msg += " " + id;
    throw ValidationError(msg);
  }

  std::vector<std::string> dangling_gold;
  for (std::size_t i = 0; i < gold_.size(); ++i) {
    const GoldLabel& g = gold_[i];
    const Note* note = find_note(g.note_id);
    if (!note) {
      dangling_gold.push_back(g.note_id);
      continue;
    }
    for (const Span& s : g.evidence) {
      if (s.start > s.end || s.end > note->text.size()) {
        throw ValidationError("gold evidence out of bounds for note '" + g.note_id + "'");
      }
    }
    if (!gold_index_.emplace(std::make_pair(g.note_id, g.category_id), i).second) {
      throw ValidationError("duplicate gold label for (" + g.note_id + ", " + g.category_id + ")");
    }
  }
  if (!dangling_gold.empty()) {
    std::string msg = "gold labels reference unknown notes:";
    for (const auto& id : dangling_gold) msg += " " + id;
    throw ValidationError(msg);
  }
}

const Patient* Corpus::find_patient(std::string_view id) const {
  const auto it = patient_index_.find(id);
  return it == patient_index_.end() ? nullptr : &patients_[it->second];
}

const Note* Corpus::find_note(std::string_view id) const {
  const auto it = note_index_.find(id);
  return it == note_index_.end() ? nullptr : &notes_[it->second];
}

std::span<const std::size_t> Corpus::notes_of(std::string_view patient_id) const {
  const auto it = notes_by_patient_.find(patient_id);
  if (it == notes_by_patient_.end()) return {};
  return it->second;
}

const GoldLabel* Corpus::find_gold(std::string_view note_id, std::string_view category_id) const {
  const auto it = gold_index_.find(std::make_pair(std::string(note_id), std::string(category_id)));
  return it == gold_index_.end() ? nullptr : &gold_[it->second];
}

namespace {

Date date_field(const Json& j, const char* key) { return Date::parse(j.at(key).get<std::string>()); }

}  // namespace

std::vector<Patient> read_patients(std::istream& in, std::string_view source) {
  std::vector<Patient> out;
  jsonl::for_each_object(in, source, [&](const Json& j) {
    Patient p;
    p.patient_id = j.at("patient_id").get<std::string>();
    p.birth_date = date_field(j, "birth_date");
    p.gender = parse_gender(j.at("gender").get<std::string>());
    p.is_case = j.at("is_case").get<bool>();
    if (j.contains("diagnosis_date") && !j["diagnosis_date"].is_null()) {
      p.diagnosis_date = date_field(j, "diagnosis_date");
    }
    if (p.is_case && !p.diagnosis_date) throw ValidationError("case patient without diagnosis_date");
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Note> read_notes(std::istream& in, std::string_view source) {
  std::vector<Note> out;
  jsonl::for_each_object(in, source, [&](const Json& j) {
    Note n;
    n.note_id = j.at("note_id").get<std::string>();
    n.patient_id = j.at("patient_id").get<std::string>();
    n.date = date_field(j, "date");
    n.department = j.at("department").get<std::string>();
    n.text = j.at("text").get<std::string>();
    if (text::is_blank(n.text)) throw ValidationError("blank note text");
    out.push_back(std::move(n));
  });
  return out;
}

std::vector<GoldLabel> read_gold(std::istream& in, std::string_view source) {
  std::vector<GoldLabel> out;
  jsonl::for_each_object(in, source, [&](const Json& j) {
    GoldLabel g;
    g.note_id = j.at("note_id").get<std::string>();
    g.category_id = j.at("category_id").get<std::string>();
    g.present = j.at("present").get<bool>();
    if (j.contains("evidence")) {
      for (const auto& e : j["evidence"]) {
        g.evidence.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()});
      }
    }
    out.push_back(std::move(g));
  });
  return out;
}

void write_patients(std::ostream& out, std::span<const Patient> patients) {
  for (const auto& p : patients) {
    Json j;
    j["patient_id"] = p.patient_id;
    j["birth_date"] = p.birth_date.to_string();
    j["gender"] = to_string(p.gender);
    j["is_case"] = p.is_case;
    j["diagnosis_date"] = p.diagnosis_date ? Json(p.diagnosis_date->to_string()) : Json(nullptr);
    out << j.dump() << '\n';
  }
}

void write_notes(std::ostream& out, std::span<const Note> notes) {
  for (const auto& n : notes) {
    Json j;
    j["note_id"] = n.note_id;
    j["patient_id"] = n.patient_id;
    j["date"] = n.date.to_string();
    j["department"] = n.department;
    j["text"] = n.text;
    out << j.dump() << '\n';
  }
}

void write_gold(std::ostream& out, std::span<const GoldLabel> gold) { out << gold_to_jsonl(gold); }

std::string gold_to_jsonl(std::span<const GoldLabel> gold) {
  std::string out;
  for (const auto& g : gold) {
    Json j;
    j["note_id"] = g.note_id;
    j["category_id"] = g.category_id;
    j["present"] = g.present;
    Json ev = Json::array();
    for (const auto& s : g.evidence) ev.push_back(Json{{"start", s.start}, {"end", s.end}});
    j["evidence"] = std::move(ev);
    out += j.dump();
    out += '\n';
  }
  return out;
}

Corpus ingest(const std::filesystem::path& dir) {
  auto patients_in = jsonl::open_input((dir / "patients.jsonl").string());
  auto notes_in = jsonl::open_input((dir / "notes.jsonl").string());
  std::vector<Patient> patients = read_patients(patients_in, "patients.jsonl");
  std::vector<Note> notes = read_notes(notes_in, "notes.jsonl");
  std::vector<GoldLabel> gold;
  if (std::filesystem::exists(dir / "gold.jsonl")) {
    auto gold_in = jsonl::open_input((dir / "gold.jsonl").string());
    gold = read_gold(gold_in, "gold.jsonl");
  }
  return Corpus(std::move(patients), std::move(notes), std::move(gold));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto p = jsonl::open_output((dir / "patients.jsonl").string());
  write_patients(p, corpus.patients());
  auto n = jsonl::open_output((dir / "notes.jsonl").string());
  write_notes(n, corpus.notes());
  if (!corpus.gold().empty()) {
    auto g = jsonl::open_output((dir / "gold.jsonl").string());
    write_gold(g, corpus.gold());
  }
}

}  // namespace symscreen
