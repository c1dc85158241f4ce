#pragma once

#include <string_view>

// Bundled default tables, compiled in from the files under data/.
namespace gisurv::data {

std::string_view keywords();
std::string_view stems();
std::string_view food_lookup();
std::string_view exceptions();
std::string_view gender_map();
std::string_view marital_map();

// Prompt specs under data/prompts/.
std::string_view gi_classification();
std::string_view gi_classification_terse();
std::string_view symptom_extraction();
std::string_view food_extraction();

}  // namespace gisurv::data
