// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "symscreen/error.hpp"
#include "symscreen/toml_lite.hpp"

namespace symscreen {

namespace embedded {
extern const std::string_view kTaxonomyToml;
}

std::string to_string(PhqQuestion q) { return "Q" + std::to_string(static_cast<int>(q)); }

std::string to_string(Direction d) {
  switch (d) {
    case Direction::increase: return "increase";
    case Direction::decrease: return "decrease";
    case Direction::both: return "both";
    case Direction::not_applicable: return "n/a";
  }
  return "n/a";
}

PhqQuestion parse_phq_question(std::string_view s) {
  if (s.size() == 2 && s[0] == 'Q' && s[1] >= '1' && s[1] <= '9') {
    return static_cast<PhqQuestion>(s[1] - '0');
  }
  throw ValidationError("invalid PHQ question '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  if (s == "increase") return Direction::increase;
  if (s == "decrease") return Direction::decrease;
  if (s == "both") return Direction::both;
  if (s == "n/a") return Direction::not_applicable;
  throw ValidationError("invalid direction '" + std::string(s) + "'");
}

Taxonomy::Taxonomy(std::vector<SymptomCategory> categories, std::string negative_first, std::string negative_last)
    : categories_(std::move(categories)),
      negative_first_(std::move(negative_first)),
      negative_last_(std::move(negative_last)) {
  std::set<std::string> seen;
  for (const auto& c : categories_) {
    if (c.id.empty()) throw ValidationError("category with empty id");
    if (!seen.insert(c.id).second) throw ValidationError("duplicate category id '" + c.id + "'");
    if (c.keywords.empty()) throw ValidationError("category '" + c.id + "' has no keyword sets");
    for (const auto& set : c.keywords) {
      if (set.empty()) throw ValidationError("category '" + c.id + "' has an empty keyword set");
    }
    for (int item : c.bdi_items) {
      if (item < 1 || item > 21) throw ValidationError("category '" + c.id + "' has BDI item out of 1..21");
    }
  }
}

const Taxonomy& Taxonomy::canonical() {
  static const Taxonomy instance = from_toml(embedded::kTaxonomyToml);
  return instance;
}

Taxonomy Taxonomy::from_toml(std::string_view source) {
  const toml::Document doc = toml::parse(source);
  const toml::Table* shots = doc.table("shots");
  if (!shots) throw ValidationError("taxonomy file lacks a [shots] table");

  std::vector<SymptomCategory> categories;
  for (const toml::Table* t : doc.array("category")) {
    SymptomCategory c;
    c.id = t->at("id").as_string();
    c.display_name = t->at("display_name").as_string();
    c.phq_question = parse_phq_question(t->at("phq_question").as_string());
    c.direction = parse_direction(t->at("direction").as_string());
    for (const auto& v : t->at("bdi_items").as_array()) c.bdi_items.push_back(static_cast<int>(v.as_int()));
    c.chat_query = t->at("chat_query").as_string();
    c.hypothesis = t->at("hypothesis").as_string();
    for (const auto& set : t->at("keywords").as_array()) c.keywords.push_back(toml::to_strings(set));
    c.shot_note = t->at("shot_note").as_string();
    c.shot_quote = t->at("shot_quote").as_string();
    categories.push_back(std::move(c));
  }
  return Taxonomy(std::move(categories), shots->at("negative_first").as_string(),
                  shots->at("negative_last").as_string());
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open taxonomy file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_toml(ss.str());
}

std::string Taxonomy::to_toml() const {
  toml::Document doc;
  toml::Table shots;
  shots.set("negative_first", toml::Value{negative_first_});
  shots.set("negative_last", toml::Value{negative_last_});
  doc.sections.push_back({"shots", false, std::move(shots)});
  for (const auto& c : categories_) {
    toml::Table t;
    t.set("id", toml::Value{c.id});
    t.set("display_name", toml::Value{c.display_name});
    t.set("phq_question", toml::Value{to_string(c.phq_question)});
    t.set("direction", toml::Value{to_string(c.direction)});
    toml::Array bdi;
    for (int i : c.bdi_items) bdi.push_back(toml::Value{static_cast<std::int64_t>(i)});
    t.set("bdi_items", toml::Value{std::move(bdi)});
    t.set("chat_query", toml::Value{c.chat_query});
    t.set("hypothesis", toml::Value{c.hypothesis});
    toml::Array kw;
    for (const auto& set : c.keywords) kw.push_back(toml::string_array(set));
    t.set("keywords", toml::Value{std::move(kw)});
    t.set("shot_note", toml::Value{c.shot_note});
    t.set("shot_quote", toml::Value{c.shot_quote});
    doc.sections.push_back({"category", true, std::move(t)});
  }
  return toml::serialize(doc);
}

const SymptomCategory* Taxonomy::find(std::string_view id) const {
  for (const auto& c : categories_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const SymptomCategory& Taxonomy::at(std::string_view id) const {
  if (const auto* c = find(id)) return *c;
  throw ValidationError("unknown category id '" + std::string(id) + "'");
}

std::optional<std::size_t> Taxonomy::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id == id) return i;
  }
  return std::nullopt;
}

const std::vector<KeywordSet>& Taxonomy::keywords_for(std::string_view id) const { return at(id).keywords; }

std::vector<Shot> Taxonomy::shots_for(const SymptomCategory& category) const {
  return {Shot{negative_first_, std::nullopt}, Shot{category.shot_note, category.shot_quote},
          Shot{negative_last_, std::nullopt}};
}

const std::vector<SymptomCategory>& taxonomy() { return Taxonomy::canonical().categories(); }

const std::vector<KeywordSet>& keywords_for(std::string_view category_id) {
  return Taxonomy::canonical().keywords_for(category_id);
}

}  // namespace symscreen
