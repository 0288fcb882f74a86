// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "symscreen/corpus.hpp"
#include "symscreen/taxonomy.hpp"

namespace symscreen {

/// Parameters of the synthetic corpus generator. Rates are per (note, category)
/// planting probabilities; a planted symptom is negated with negation_rate and
/// otherwise realized as a paraphrase with paraphrase_rate.
struct SynthSpec {
  std::uint64_t seed = 7;
  std::size_t n_cases = 50;
  std::size_t n_controls = 50;
  std::size_t min_notes = 3;
  std::size_t max_notes = 10;
  std::map<std::string, double> category_rates_case;
  std::map<std::string, double> category_rates_control;
  double paraphrase_rate = 0.3;
  double negation_rate = 0.1;
  double distractor_rate = 0.3;
  double phq_rate = 0.3;  ///< probability a note carries a PHQ score block

  /// Rates derived from the case/control split of detected symptom notes
  /// (72% in cases on average) over a 50/50 cohort of 3,000 + 3,000 notes.
  static SynthSpec reference_defaults();
  /// Same rate for every category in both arms.
  static SynthSpec uniform(double rate);

  /// Throws ValidationError when a probability is outside [0,1], an arm is
  /// empty, the note range is invalid, or a rate names an unknown category.
  void validate(const Taxonomy& taxonomy) const;
};

enum class PlantForm { direct, paraphrase, negated };

std::string to_string(PlantForm f);

/// Generator-side record of one planted sentence.
struct Plant {
  std::string note_id;
  std::string category_id;
  PlantForm form = PlantForm::direct;
  Span span;
};

struct CategoryTemplates {
  std::vector<std::string> direct;
  std::vector<std::string> paraphrase;
  std::vector<std::string> negated;
};

/// Sentence templates, loaded from data/templates.toml.
struct SynthTemplates {
  std::vector<std::string> openers;
  std::vector<std::string> closers;
  std::vector<std::string> distractors;
  std::map<std::string, CategoryTemplates, std::less<>> categories;

  static const SynthTemplates& canonical();
  static SynthTemplates from_toml(std::string_view source);
};

struct SynthResult {
  Corpus corpus;  ///< includes note-complete gold labels
  std::vector<Plant> plants;
};

/// Deterministic for a fixed spec: the same spec always yields byte-identical
/// corpus files. Gold labels cover every (note, category) pair and are
/// positive exactly for non-negated plants.
SynthResult synthesize(const SynthSpec& spec, const Taxonomy& taxonomy = Taxonomy::canonical(),
                       const SynthTemplates& templates = SynthTemplates::canonical());

}  // namespace symscreen
