// Copyright 2026 The T2G2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "support/fixture_corpus.hpp"
#include "support/temp_dir.hpp"
#include "t2g2/evaluation.hpp"
#include "t2g2/template_engine.hpp"

namespace t2g2 {
namespace {

using testing::TempDir;

fs::path data_dir() { return fs::path(T2G2_SOURCE_DIR) / "data"; }

TEST(ParseTemplates, KeysAndArity) {
  const auto st = parse_template_text(
      "service: RideSharing_1\n"
      "# comment\n"
      "\n"
      "request(dest): Where are you riding to?\n"
      "inform(fare=$x): Your ride costs $x dollars.\n"
      "goodbye: Bye!\n",
      "mem");
  EXPECT_EQ(st.service, "RideSharing_1");
  EXPECT_FALSE(st.confirm_prefix.has_value());
  ASSERT_EQ(st.templates.size(), 3u);
  EXPECT_FALSE(st.find({"request", "dest"})->parameterized);
  EXPECT_TRUE(st.find({"inform", "fare"})->parameterized);
  EXPECT_EQ(st.find({"goodbye", std::nullopt})->text, "Bye!");
}

TEST(ParseTemplates, PlaceholderWithoutValueSlot) {
  EXPECT_THROW(parse_template_text("service: S_1\nrequest(dest): Going to $x?\n", "mem"), PlaceholderMismatch);
  EXPECT_THROW(parse_template_text("service: S_1\ninform(fare=$x): It costs a lot.\n", "mem"), PlaceholderMismatch);
  EXPECT_THROW(parse_template_text("service: S_1\nconfirm_prefix: Confirm $x:\n", "mem"), PlaceholderMismatch);
}

TEST(ParseTemplates, MalformedInput) {
  EXPECT_THROW(parse_template_text("goodbye: Bye!\n", "mem"), ParseError);
  EXPECT_THROW(parse_template_text("service: S_1\ngoodbye: Bye!\ngoodbye: Bye again!\n", "mem"), ParseError);
  EXPECT_THROW(parse_template_text("service: S_1\ngoodbye: Bye\n", "mem"), ParseError);
  EXPECT_THROW(parse_template_text("service: S_1\ngoodbye Bye!\n", "mem"), ParseError);
}

TEST(ParseTemplates, SerializeRoundTrip) {
  const auto reg = load_templates(data_dir() / "templates");
  ASSERT_GE(reg.services().size(), 3u);
  for (const auto& [name, st] : reg.services()) EXPECT_EQ(parse_template_text(serialize(st), name), st);
}

TEST(LoadTemplates, DuplicateServiceAcrossFiles) {
  TempDir dir;
  write_file(dir / "a.tmpl", "service: S_1\ngoodbye: Bye!\n");
  write_file(dir / "b.tmpl", "service: S_1\nreq_more: More?\n");
  EXPECT_THROW(load_templates(dir.path()), DuplicateService);
}

class ShippedTemplates : public ::testing::Test {
 protected:
  TemplateRegistry reg_ = load_templates(data_dir() / "templates");
};

TEST_F(ShippedTemplates, RestaurantInform) {
  const ActionFrame f{"Restaurants_1", {{"inform", "restaurant", "Opa!"}, {"inform", "cuisine", "greek"}}};
  EXPECT_EQ(render_frame(f, reg_), "How about the restaurant Opa!. The restaurant serves greek food.");
}

TEST_F(ShippedTemplates, RideSharing) {
  EXPECT_EQ(render_frame({"RideSharing_1", {{"notify_success", std::nullopt, std::nullopt}}}, reg_),
            "Your ride is booked and the cab is on its way.");
  EXPECT_EQ(render_frame({"RideSharing_1", {{"request", "dest", std::nullopt}}}, reg_), "Where are you riding to?");
  EXPECT_EQ(render_frame({"RideSharing_1", {{"inform", "seats", "2"}}}, reg_), "The cab is for 2 riders.");
}

TEST_F(ShippedTemplates, ValueWithDollarSignIsVerbatim) {
  EXPECT_EQ(render_frame({"RideSharing_1", {{"inform", "fare", "$23"}}}, reg_), "Your ride costs $23 dollars.");
  EXPECT_EQ(render_frame({"RideSharing_1", {{"inform", "fare", "$x"}}}, reg_), "Your ride costs $x dollars.");
}

TEST_F(ShippedTemplates, WeatherTwoInforms) {
  const ActionFrame f{"Weather_1", {{"inform", "humidity", "28"}, {"inform", "wind", "3"}}};
  EXPECT_EQ(render_frame(f, reg_),
            "The humidity is around 28 percent. The average wind speed should be 3 miles per hour.");
}

TEST_F(ShippedTemplates, ConfirmRunSharesOnePrefix) {
  const ActionFrame f{"Restaurants_1",
                      {{"confirm", "restaurant", "Nizza La Bella"},
                       {"confirm", "city", "Albany"},
                       {"confirm", "time", "6:15 pm"},
                       {"confirm", "party_size", "2"},
                       {"confirm", "date", "March 7th"}}};
  EXPECT_EQ(render_frame(f, reg_),
            "Please confirm the following details: Booking a table at Nizza La Bella. The city is Albany. "
            "The reservation is at 6:15 pm. The reservation is for 2 people. The date is March 7th.");
  EXPECT_EQ(render_frame(f, reg_, {.coalesce_confirm = false}),
            "Booking a table at Nizza La Bella. The city is Albany. "
            "The reservation is at 6:15 pm. The reservation is for 2 people. The date is March 7th.");
}

TEST_F(ShippedTemplates, InterruptedConfirmRunGetsSecondPrefix) {
  const ActionFrame f{"RideSharing_1",
                      {{"confirm", "dest", "Berkeley"}, {"inform", "fare", "$9"}, {"confirm", "seats", "2"}}};
  EXPECT_EQ(render_frame(f, reg_),
            "Please confirm the following details: You are going to Berkeley. Your ride costs $9 dollars. "
            "Please confirm the following details: The cab is for 2 riders.");
}

TEST_F(ShippedTemplates, MissingTemplate) {
  const ActionFrame f{"RideSharing_1", {{"inform", "dropoff", "SFO"}}};
  try {
    render_frame(f, reg_);
    FAIL() << "expected MissingTemplate";
  } catch (const MissingTemplate& e) {
    EXPECT_EQ(e.service(), "RideSharing_1");
    EXPECT_EQ(e.key(), "inform(dropoff)");
  }
  EXPECT_EQ(render_frame(f, reg_, {.fallback_naive = true}), "inform ( dropoff = SFO )");
}

TEST_F(ShippedTemplates, ArityMismatchAtRender) {
  EXPECT_THROW(render_frame({"RideSharing_1", {{"inform", "fare", std::nullopt}}}, reg_), PlaceholderMismatch);
  EXPECT_THROW(render_frame({"RideSharing_1", {{"request", "dest", "Berkeley"}}}, reg_), PlaceholderMismatch);
}

TEST(ValidateCoverage, ReportsMissingKeysSorted) {
  ServiceTemplates st{"S_1", std::nullopt, {}};
  std::set<ServiceKey> keys;
  for (int i = 0; i < 12; ++i) {
    const TemplateKey k{"inform", "slot" + std::to_string(i)};
    keys.insert({"S_1", k});
    if (i != 3 && i != 10) st.templates.emplace(k, Template{k, "It is $x.", true});
  }
  TemplateRegistry reg;
  reg.add(st);
  const auto missing = validate_coverage(reg, keys);
  ASSERT_EQ(missing.size(), 2u);
  EXPECT_EQ(to_string(missing[0]), "S_1 inform(slot10)");
  EXPECT_EQ(to_string(missing[1]), "S_1 inform(slot3)");
  EXPECT_TRUE(std::is_sorted(missing.begin(), missing.end()));
}

TEST(ValidateCoverage, UnknownServiceMissesEverything) {
  const std::vector<ActionFrame> frames = {{"X_1", {{"goodbye", std::nullopt, std::nullopt}, {"request", "a", std::nullopt}}}};
  EXPECT_EQ(validate_coverage(TemplateRegistry{}, keys_of(frames)).size(), 2u);
}

TEST(RenderProperty, EveryValueSurvivesRendering) {
  TempDir dir;
  testing::write_fixture_corpus(dir.path());
  testing::write_fixture_templates(dir / "templates");
  const auto catalog = load_schemas(dir / "train");
  const auto reg = load_templates(dir / "templates");
  std::mt19937 rng(11);
  std::vector<NlgExample> examples;
  std::vector<std::string> coalesced, plain;
  const auto domains = testing::shared_domains();
  for (int i = 0; i < 1000; ++i) {
    const auto& domain = domains[rng() % domains.size()];
    const auto menu = testing::action_menu(domain);
    ActionFrame f{domain + "_1", {}};
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& item = menu[rng() % menu.size()];
      f.actions.push_back({item.act, item.slot, item.has_value ? std::optional(testing::random_value(item, rng)) : std::nullopt});
    }
    NlgExample ex;
    ex.id = "p:" + std::to_string(i);
    ex.service = f.service;
    ex.domain = domain;
    ex.frame = f;
    ex.slot_values = slot_values_of(f, catalog.at(f.service));
    coalesced.push_back(render_frame(f, reg));
    plain.push_back(render_frame(f, reg, {.coalesce_confirm = false}));
    examples.push_back(std::move(ex));
  }
  EXPECT_EQ(slot_error_rate(examples, coalesced).ser, 0.0);
  EXPECT_EQ(slot_error_rate(examples, plain).ser, 0.0);
}

}  // namespace
}  // namespace t2g2
