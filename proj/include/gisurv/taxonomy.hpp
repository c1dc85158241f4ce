#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gisurv {

enum class Task { gi_classification, symptom_extraction, food_extraction };

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view s);

// Symptom labels. `general_sickness` is the fallback and never co-occurs
// with any other label.
enum class SymptomLabel { diarrhoea, vomiting, abdominal_pain, bloody_stool, nausea, general_sickness };

inline constexpr std::array<SymptomLabel, 6> all_symptom_labels{
    SymptomLabel::diarrhoea,    SymptomLabel::vomiting, SymptomLabel::abdominal_pain,
    SymptomLabel::bloody_stool, SymptomLabel::nausea,   SymptomLabel::general_sickness,
};

std::string_view to_string(SymptomLabel label);
std::optional<SymptomLabel> parse_symptom_label(std::string_view s);

// The 27 food-safety labels, in the order of the published rationale table.
enum class FoodLabel {
    meat,
    beef,
    other_meat,
    pork,
    mutton_lamb,
    poultry,
    cured_meat,
    sausage,
    other_processed_meat,
    seafood,
    fish,
    shellfish,
    other_seafood,
    dairy,
    eggs,
    rice,
    vegetable,
    lettuce,
    salad,
    sprouts,
    funghi,
    herbs,
    nuts_and_seeds,
    tofu_and_other_soy,
    fruit,
    berries,
    other,
};

inline constexpr std::size_t food_label_count = 27;

const std::array<FoodLabel, food_label_count> &all_food_labels();

std::string_view to_string(FoodLabel label);
std::optional<FoodLabel> parse_food_label(std::string_view s);

using SymptomSet = std::set<SymptomLabel>;
using FoodSet = std::set<FoodLabel>;

/// True unless the set holds `general sickness` together with another label.
bool symptoms_exclusive(const SymptomSet &labels);

/// Ordered label names used when scoring a task: "Not-GI"/"GI" for the
/// binary task, the symptom or food label strings otherwise.
std::vector<std::string> taxonomy_for(Task task);

inline constexpr std::string_view not_gi_label = "Not-GI";
inline constexpr std::string_view gi_label = "GI";

}  // namespace gisurv
