#include "gisurv/disambiguation.hpp"
#include "gisurv/error.hpp"

#include <doctest.h>

using namespace gisurv;

TEST_CASE("symptom examples") {
    CHECK(disambiguate_symptoms({"vomiting", "diarrhea"}) == SymptomSet{SymptomLabel::vomiting, SymptomLabel::diarrhoea});
    CHECK(disambiguate_symptoms({"puking"}) == SymptomSet{SymptomLabel::vomiting});
    CHECK(disambiguate_symptoms({"got sick"}) == SymptomSet{SymptomLabel::general_sickness});
    CHECK(disambiguate_symptoms({}).empty());
}

TEST_CASE("stem kinds") {
    const auto &t = StemTable::defaults();
    CHECK(t.match("threw up everywhere") == SymptomSet{SymptomLabel::vomiting});
    CHECK(t.match("the runs") == SymptomSet{SymptomLabel::diarrhoea});
    CHECK(t.match("had the run") == SymptomSet{SymptomLabel::diarrhoea});
    CHECK(t.match("running nose").empty());
    CHECK(t.match("Stomach  Cramps") == SymptomSet{SymptomLabel::abdominal_pain});
    CHECK(t.match("queasy") == SymptomSet{SymptomLabel::nausea});
    CHECK(t.match("bloody stool") == SymptomSet{SymptomLabel::bloody_stool});
    // prefixes anchor at word starts
    CHECK(t.match("unvomited").empty());
    // general sickness is never matched, only assigned as the fallback
    CHECK(disambiguate_symptoms({"fever", "vomit"}) == SymptomSet{SymptomLabel::vomiting});
}

TEST_CASE("stem table validation") {
    CHECK_THROWS_AS(StemTable::parse("vomiting\tvom\n"), DataError);
    CHECK_THROWS_AS(StemTable::parse("coughing\tcough\n"), DataError);
    CHECK_THROWS_AS(StemTable::parse("general sickness\tsick\n"), DataError);
}

TEST_CASE("clarifiers and singulars") {
    CHECK(strip_clarifiers("chicken (fresh meat)") == "chicken");
    CHECK(strip_clarifiers("a (b (c)) d") == "a d");
    CHECK(strip_clarifiers("no parens") == "no parens");
    CHECK(singularize("prawns") == "prawn");
    CHECK(singularize("berries") == "berry");
    CHECK(singularize("sandwiches") == "sandwich");
    CHECK(singularize("boxes") == "box");
    CHECK(singularize("potatoes") == "potato");
    CHECK(singularize("cookies") == "cookie");
    CHECK(singularize("hummus") == "hummus");
    CHECK(singularize("bus") == "bus");
    CHECK(singularize("glass") == "glass");
    CHECK(singularize("rice") == "rice");
}

TEST_CASE("normalize_food_term candidate order") {
    CHECK(normalize_food_term("chicken (fresh meat)") == std::vector<std::string>{"chicken"});
    CHECK(normalize_food_term("Fried  Prawns") ==
          std::vector<std::string>{"fried prawns", "fried", "prawns", "prawn"});
    CHECK(normalize_food_term("  ").empty());
}

TEST_CASE("food lookup") {
    CHECK(disambiguate_foods({"chicken (fresh meat)"}) == FoodSet{FoodLabel::poultry});
    CHECK(disambiguate_foods({"Prawns"}) == FoodSet{FoodLabel::shellfish});
    CHECK(disambiguate_foods({"ice cream"}) == FoodSet{FoodLabel::dairy});
    CHECK(disambiguate_foods({"beef tacos"}) == FoodSet{FoodLabel::beef, FoodLabel::other});
    CHECK(disambiguate_foods({"mystery stew"}).empty());
    CHECK(disambiguate_foods({}).empty());
    const auto *e = FoodLookupTable::defaults().find("salmon");
    REQUIRE(e != nullptr);
    CHECK(e->label == FoodLabel::fish);
}

TEST_CASE("food table validation") {
    FoodLookupTable t;
    t.add("beef", FoodLabel::beef, "foodex");
    CHECK_THROWS_AS(t.add("beef", FoodLabel::meat, "foodex"), DataError);
    CHECK_THROWS_AS(t.add("Beef mince", FoodLabel::beef, "foodex"), DataError);
    CHECK_THROWS_AS(t.add("beef (raw)", FoodLabel::beef, "foodex"), DataError);
    CHECK_THROWS_AS(t.add("beef  mince", FoodLabel::beef, "foodex"), DataError);
    CHECK_THROWS_AS(FoodLookupTable::parse("beef\tnot-a-label\n"), DataError);
    CHECK(FoodLookupTable::parse("beef\tbeef\n# c\nkale\tvegetable\tsupplementary\n").size() == 2);

    // every bundled label is reachable
    std::set<FoodLabel> seen;
    for (const auto &[term, entry] : FoodLookupTable::defaults().entries()) seen.insert(entry.label);
    CHECK(seen.size() == food_label_count);
}
