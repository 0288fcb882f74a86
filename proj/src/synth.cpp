// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/synth.hpp"

#include <array>
#include <cstdio>

#include "symscreen/error.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/toml_lite.hpp"

namespace symscreen {

namespace embedded {
extern const std::string_view kTemplatesToml;
}

namespace {

struct ReferenceRate {
  const char* id;
  int notes_all;
  int pct_case;
};

// Notes per symptom detected over 3,000 case + 3,000 control notes, and the
// share of those notes that belong to cases.
constexpr std::array<ReferenceRate, 16> kReferenceRates = {{
    {"not_going_to_school", 91, 59},
    {"neglecting_activities", 210, 60},
    {"no_motivation", 68, 79},
    {"feeling_depressed", 280, 86},
    {"feeling_anxious", 271, 78},
    {"feeling_down", 411, 83},
    {"irritability", 109, 67},
    {"mh_concerns", 433, 63},
    {"sleep_problems", 396, 66},
    {"high_appetite", 57, 74},
    {"low_appetite", 291, 68},
    {"weight_change", 107, 60},
    {"little_energy", 271, 63},
    {"self_loathing", 234, 88},
    {"abnormal_behavior", 88, 65},
    {"suicidal_thoughts", 279, 85},
}};

constexpr double kNotesPerArm = 3000.0;

constexpr std::array<const char*, 5> kDepartments = {"Primary Care", "Adolescent Medicine", "Endocrinology",
                                                     "Pediatrics", "Gastroenterology"};

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(what + " must be in [0,1]");
}

struct Piece {
  std::string text;
  const SymptomCategory* category = nullptr;  // null for boilerplate
  PlantForm form = PlantForm::direct;
};

}  // namespace

std::string to_string(PlantForm f) {
  switch (f) {
    case PlantForm::direct: return "direct";
    case PlantForm::paraphrase: return "paraphrase";
    case PlantForm::negated: return "negated";
  }
  return "direct";
}

SynthSpec SynthSpec::reference_defaults() {
  SynthSpec s;
  for (const auto& row : kReferenceRates) {
    const double per_note = row.notes_all / (2.0 * kNotesPerArm);
    s.category_rates_case[row.id] = 2.0 * per_note * row.pct_case / 100.0;
    s.category_rates_control[row.id] = 2.0 * per_note * (100 - row.pct_case) / 100.0;
  }
  return s;
}

SynthSpec SynthSpec::uniform(double rate) {
  SynthSpec s;
  for (const auto& c : Taxonomy::canonical().categories()) {
    s.category_rates_case[c.id] = rate;
    s.category_rates_control[c.id] = rate;
  }
  return s;
}

void SynthSpec::validate(const Taxonomy& taxonomy) const {
  if (n_cases < 1 || n_controls < 1) throw ValidationError("n_cases and n_controls must be at least 1");
  if (min_notes < 1 || min_notes > max_notes) throw ValidationError("notes_per_patient range is invalid");
  check_probability(paraphrase_rate, "paraphrase_rate");
  check_probability(negation_rate, "negation_rate");
  check_probability(distractor_rate, "distractor_rate");
  check_probability(phq_rate, "phq_rate");
  for (const auto* rates : {&category_rates_case, &category_rates_control}) {
    for (const auto& [id, p] : *rates) {
      if (!taxonomy.find(id)) throw ValidationError("rate for unknown category '" + id + "'");
      check_probability(p, "rate for " + id);
    }
  }
}

const SynthTemplates& SynthTemplates::canonical() {
  static const SynthTemplates instance = from_toml(embedded::kTemplatesToml);
  return instance;
}

SynthTemplates SynthTemplates::from_toml(std::string_view source) {
  const toml::Document doc = toml::parse(source);
  const toml::Table* boiler = doc.table("boilerplate");
  if (!boiler) throw ValidationError("templates file lacks a [boilerplate] table");
  SynthTemplates t;
  t.openers = toml::to_strings(boiler->at("openers"));
  t.closers = toml::to_strings(boiler->at("closers"));
  t.distractors = toml::to_strings(boiler->at("distractors"));
  if (t.openers.empty() || t.closers.empty()) throw ValidationError("templates need openers and closers");
  for (const toml::Table* c : doc.array("category")) {
    CategoryTemplates ct;
    ct.direct = toml::to_strings(c->at("direct"));
    ct.paraphrase = toml::to_strings(c->at("paraphrase"));
    ct.negated = toml::to_strings(c->at("negated"));
    const std::string& id = c->at("id").as_string();
    if (ct.direct.empty() || ct.paraphrase.empty() || ct.negated.empty()) {
      throw ValidationError("templates for '" + id + "' need direct, paraphrase and negated forms");
    }
    t.categories.emplace(id, std::move(ct));
  }
  return t;
}

SynthResult synthesize(const SynthSpec& spec, const Taxonomy& taxonomy, const SynthTemplates& templates) {
  spec.validate(taxonomy);
  for (const auto& c : taxonomy.categories()) {
    if (!templates.categories.contains(c.id)) throw ValidationError("no templates for category '" + c.id + "'");
  }

  Rng rng(spec.seed);
  std::vector<Patient> patients;
  std::vector<Note> notes;
  std::vector<GoldLabel> gold;
  std::vector<Plant> plants;
  const Date epoch(2012, 1, 1);
  std::size_t patient_seq = 0;
  std::size_t note_seq = 0;

  auto rate = [](const std::map<std::string, double>& rates, const std::string& id) {
    const auto it = rates.find(id);
    return it == rates.end() ? 0.0 : it->second;
  };

  auto make_id = [](const char* prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%06zu", prefix, n);
    return std::string(buf);
  };

  auto emit_notes = [&](const Patient& p, const Date& anchor) {
    const auto count = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.min_notes), static_cast<std::int64_t>(spec.max_notes)));
    std::vector<Date> dates;
    for (std::size_t i = 0; i < count; ++i) dates.push_back(anchor.plus_days(-rng.between(0, 540)));
    std::sort(dates.begin(), dates.end());

    const auto& rates = p.is_case ? spec.category_rates_case : spec.category_rates_control;
    for (const Date& date : dates) {
      Note note;
      note.note_id = make_id("N", ++note_seq);
      note.patient_id = p.patient_id;
      note.date = date;
      note.department = kDepartments[rng.below(kDepartments.size())];

      std::vector<Piece> middle;
      for (const auto& d : templates.distractors) {
        if (rng.bernoulli(spec.distractor_rate)) middle.push_back({d, nullptr, PlantForm::direct});
      }
      for (const auto& c : taxonomy.categories()) {
        if (!rng.bernoulli(rate(rates, c.id))) continue;
        const CategoryTemplates& ct = templates.categories.find(c.id)->second;
        PlantForm form = PlantForm::direct;
        if (rng.bernoulli(spec.negation_rate)) {
          form = PlantForm::negated;
        } else if (rng.bernoulli(spec.paraphrase_rate)) {
          form = PlantForm::paraphrase;
        }
        const auto& pool = form == PlantForm::direct ? ct.direct
                           : form == PlantForm::paraphrase ? ct.paraphrase
                                                           : ct.negated;
        middle.push_back({rng.pick(pool), &c, form});
      }
      rng.shuffle(std::span<Piece>(middle));

      std::vector<Piece> pieces;
      pieces.push_back({rng.pick(templates.openers), nullptr, PlantForm::direct});
      for (auto& m : middle) pieces.push_back(std::move(m));
      pieces.push_back({rng.pick(templates.closers), nullptr, PlantForm::direct});

      std::map<std::string, Span> positive;
      for (const Piece& piece : pieces) {
        if (!note.text.empty()) note.text += ' ';
        const Span span{note.text.size(), note.text.size() + piece.text.size()};
        note.text += piece.text;
        if (!piece.category) continue;
        plants.push_back({note.note_id, piece.category->id, piece.form, span});
        if (piece.form != PlantForm::negated) positive.emplace(piece.category->id, span);
      }

      if (rng.bernoulli(spec.phq_rate)) {
        const std::int64_t score = p.is_case ? rng.between(5, 24) : rng.between(0, 15);
        const double kind = rng.uniform();
        if (kind < 0.6) {
          note.text += "\nPHQ-9 Total Score: " + std::to_string(score) + "\nItems Answered: 9";
        } else if (kind < 0.95) {
          note.text += "\nPHQ-9 Total Score: " + std::to_string(score) + "\nItems Answered: 2";
        } else {
          note.text += "\nPHQ-9 Total Score: see scanned form";
        }
      }

      for (const auto& c : taxonomy.categories()) {
        GoldLabel g{note.note_id, c.id, false, {}};
        if (const auto it = positive.find(c.id); it != positive.end()) {
          g.present = true;
          g.evidence.push_back(it->second);
        }
        gold.push_back(std::move(g));
      }
      notes.push_back(std::move(note));
    }
  };

  const std::size_t rounds = std::max(spec.n_cases, spec.n_controls);
  for (std::size_t i = 0; i < rounds; ++i) {
    std::optional<Patient> matched_case;
    if (i < spec.n_cases) {
      Patient c;
      c.patient_id = make_id("P", ++patient_seq);
      c.is_case = true;
      c.gender = rng.bernoulli(0.5) ? Gender::F : Gender::M;
      c.diagnosis_date = epoch.plus_days(rng.between(0, 3000));
      c.birth_date = c.diagnosis_date->plus_days(-rng.between(15 * 365, 17 * 365 + 364));
      patients.push_back(c);
      emit_notes(c, *c.diagnosis_date);
      matched_case = c;
    }
    if (i < spec.n_controls) {
      Patient k;
      k.patient_id = make_id("P", ++patient_seq);
      k.is_case = false;
      Date anchor;
      if (matched_case) {
        k.gender = matched_case->gender;
        k.birth_date = matched_case->birth_date.plus_days(rng.between(-30, 30));
        anchor = *matched_case->diagnosis_date;
      } else {
        k.gender = rng.bernoulli(0.5) ? Gender::F : Gender::M;
        anchor = epoch.plus_days(rng.between(0, 3000));
        k.birth_date = anchor.plus_days(-rng.between(15 * 365, 17 * 365 + 364));
      }
      patients.push_back(k);
      emit_notes(k, anchor);
    }
  }

  return SynthResult{Corpus(std::move(patients), std::move(notes), std::move(gold)), std::move(plants)};
}

}  // namespace symscreen
