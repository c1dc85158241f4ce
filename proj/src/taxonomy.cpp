#include "gisurv/taxonomy.hpp"

#include <utility>

namespace gisurv {

namespace {

constexpr std::array<std::pair<FoodLabel, std::string_view>, food_label_count> food_names{{
    {FoodLabel::meat, "meat"},
    {FoodLabel::beef, "beef"},
    {FoodLabel::other_meat, "other meat"},
    {FoodLabel::pork, "pork"},
    {FoodLabel::mutton_lamb, "mutton/lamb"},
    {FoodLabel::poultry, "poultry"},
    {FoodLabel::cured_meat, "cured meat"},
    {FoodLabel::sausage, "sausage"},
    {FoodLabel::other_processed_meat, "other processed meat"},
    {FoodLabel::seafood, "seafood"},
    {FoodLabel::fish, "fish"},
    {FoodLabel::shellfish, "shellfish"},
    {FoodLabel::other_seafood, "other seafood"},
    {FoodLabel::dairy, "dairy"},
    {FoodLabel::eggs, "eggs"},
    {FoodLabel::rice, "rice"},
    {FoodLabel::vegetable, "vegetable"},
    {FoodLabel::lettuce, "lettuce"},
    {FoodLabel::salad, "salad"},
    {FoodLabel::sprouts, "sprouts"},
    {FoodLabel::funghi, "funghi"},
    {FoodLabel::herbs, "herbs"},
    {FoodLabel::nuts_and_seeds, "nuts and seeds"},
    {FoodLabel::tofu_and_other_soy, "tofu and other soy"},
    {FoodLabel::fruit, "fruit"},
    {FoodLabel::berries, "berries"},
    {FoodLabel::other, "other"},
}};

constexpr std::array<std::pair<SymptomLabel, std::string_view>, 6> symptom_names{{
    {SymptomLabel::diarrhoea, "diarrhoea"},
    {SymptomLabel::vomiting, "vomiting"},
    {SymptomLabel::abdominal_pain, "abdominal pain"},
    {SymptomLabel::bloody_stool, "bloody stool"},
    {SymptomLabel::nausea, "nausea"},
    {SymptomLabel::general_sickness, "general sickness"},
}};

}  // namespace

std::string_view to_string(Task task) {
    switch (task) {
    case Task::gi_classification: return "gi_classification";
    case Task::symptom_extraction: return "symptom_extraction";
    case Task::food_extraction: return "food_extraction";
    }
    return "";
}

std::optional<Task> parse_task(std::string_view s) {
    for (auto t : {Task::gi_classification, Task::symptom_extraction, Task::food_extraction})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::string_view to_string(SymptomLabel label) {
    return symptom_names[static_cast<std::size_t>(label)].second;
}

std::optional<SymptomLabel> parse_symptom_label(std::string_view s) {
    for (const auto &[label, name] : symptom_names)
        if (name == s) return label;
    return std::nullopt;
}

const std::array<FoodLabel, food_label_count> &all_food_labels() {
    static const auto labels = [] {
        std::array<FoodLabel, food_label_count> out{};
        for (std::size_t i = 0; i < food_label_count; ++i) out[i] = food_names[i].first;
        return out;
    }();
    return labels;
}

std::string_view to_string(FoodLabel label) {
    return food_names[static_cast<std::size_t>(label)].second;
}

std::optional<FoodLabel> parse_food_label(std::string_view s) {
    for (const auto &[label, name] : food_names)
        if (name == s) return label;
    return std::nullopt;
}

bool symptoms_exclusive(const SymptomSet &labels) {
    return !(labels.contains(SymptomLabel::general_sickness) && labels.size() > 1);
}

std::vector<std::string> taxonomy_for(Task task) {
    std::vector<std::string> out;
    switch (task) {
    case Task::gi_classification:
        out = {std::string(not_gi_label), std::string(gi_label)};
        break;
    case Task::symptom_extraction:
        for (auto l : all_symptom_labels) out.emplace_back(to_string(l));
        break;
    case Task::food_extraction:
        for (auto l : all_food_labels()) out.emplace_back(to_string(l));
        break;
    }
    return out;
}

}  // namespace gisurv
