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

#include "support/temp_dir.hpp"
#include "t2g2/dialogue.hpp"
#include "t2g2/schema.hpp"
#include "t2g2/splits.hpp"

namespace t2g2 {
namespace {

using testing::TempDir;

constexpr const char* kRideSchema = R"([
  {"service_name": "RideSharing_1", "description": "Book a cab",
   "slots": [
     {"name": "dest", "description": "destination of the ride", "is_categorical": false, "possible_values": []},
     {"name": "shared", "description": "whether the ride is shared", "is_categorical": true,
      "possible_values": ["True", "False"]},
     {"name": "fare", "description": "total fare", "is_categorical": false, "possible_values": []}
   ]}
])";

constexpr const char* kFourTurnDialogue = R"([
  {"dialogue_id": "1_00000", "services": ["RideSharing_1"],
   "turns": [
     {"speaker": "USER", "utterance": "I need a cab.", "frames": [{"service": "RideSharing_1", "actions": [{"act": "INFORM_INTENT", "slot": "intent", "values": ["GetRide"]}]}]},
     {"speaker": "SYSTEM", "utterance": "Where are you riding to?",
      "frames": [{"service": "RideSharing_1", "actions": [{"act": "REQUEST", "slot": "dest", "values": []}]}]},
     {"speaker": "USER", "utterance": "Berkeley.", "frames": []},
     {"speaker": "SYSTEM", "utterance": "It costs $23 or $25.",
      "frames": [{"service": "RideSharing_1", "actions": [{"act": "INFORM", "slot": "fare", "values": ["$23", "$25"]},
                                                          {"act": "GOODBYE", "slot": "", "values": []}]}]}
   ]}
])";

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

TEST(LoadSchemas, EmptyDirectoryGivesEmptyCatalog) {
  TempDir dir;
  EXPECT_TRUE(load_schemas(dir.path()).empty());
}

TEST(LoadSchemas, FlagsBooleanSlotsFromPossibleValues) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto catalog = load_schemas(dir.path());
  ASSERT_EQ(catalog.size(), 1u);
  const auto& s = catalog.at("RideSharing_1");
  EXPECT_EQ(s.domain, "RideSharing");
  EXPECT_FALSE(s.find_slot("dest")->is_boolean);
  EXPECT_TRUE(s.find_slot("shared")->is_boolean);
  EXPECT_FALSE(s.find_slot("fare")->is_boolean);
  // count / intent are always available for inform_count and offer_intent.
  EXPECT_NE(s.find_slot("count"), nullptr);
  EXPECT_NE(s.find_slot("intent"), nullptr);
}

TEST(LoadSchemas, DuplicateServiceAcrossFiles) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  write_file(dir / "schema_extra.json", kRideSchema);
  EXPECT_THROW(load_schemas(dir.path()), DuplicateService);
}

TEST(LoadSchemas, SyntaxErrorReportsLine) {
  TempDir dir;
  write_file(dir / "schema.json", "[\n  {\"service_name\": \"A_1\",\n   \"slots\": [}\n]");
  try {
    load_schemas(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(e.file().find("schema.json"), std::string::npos);
  }
}

TEST(LoadDialogues, FourTurnDialogueHasTwoSystemFrames) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  write_file(dir / "dialogues_001.json", kFourTurnDialogue);
  const auto catalog = load_schemas(dir.path());
  const auto dialogues = load_dialogues(dir.path(), catalog);
  ASSERT_EQ(dialogues.size(), 1u);
  std::size_t system_frames = 0;
  for (const auto& t : dialogues[0].turns) system_frames += t.frames.size();
  EXPECT_EQ(system_frames, 2u);
  // Multi-valued inform is decomposed, acts are lowercased, order is kept.
  const auto& last = dialogues[0].turns[3].frames[0].actions;
  ASSERT_EQ(last.size(), 3u);
  EXPECT_EQ(last[0], (Action{"inform", "fare", "$23"}));
  EXPECT_EQ(last[1], (Action{"inform", "fare", "$25"}));
  EXPECT_EQ(last[2], (Action{"goodbye", std::nullopt, std::nullopt}));
  // USER frames are ignored.
  EXPECT_TRUE(dialogues[0].turns[0].frames.empty());
}

TEST(LoadDialogues, UnknownSlot) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto bad = replace_once(kFourTurnDialogue, "\"dest\"", "\"destination\"");
  write_file(dir / "dialogues_001.json", bad);
  EXPECT_THROW(load_dialogues(dir.path(), load_schemas(dir.path())), UnknownSlot);
}

TEST(LoadDialogues, UnknownService) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto bad = replace_once(kFourTurnDialogue, "RideSharing_1", "RideSharing_9");
  write_file(dir / "dialogues_001.json", bad);
  EXPECT_THROW(load_dialogues(dir.path(), load_schemas(dir.path())), UnknownService);
}

TEST(LoadDialogues, EmptyDirectoryGivesNoDialogues) {
  TempDir dir;
  EXPECT_TRUE(load_dialogues(dir.path(), SchemaCatalog{}).empty());
}

TEST(LoadDialogues, RejectsSystemTurnWithoutActions) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto bad = replace_once(kFourTurnDialogue, "{\"act\": \"REQUEST\", \"slot\": \"dest\", \"values\": []}", "");
  write_file(dir / "dialogues_001.json", bad);
  EXPECT_THROW(load_dialogues(dir.path(), load_schemas(dir.path())), ParseError);
}

TEST(LoadDialogues, RejectsNonAlternatingSpeakers) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto bad = replace_once(kFourTurnDialogue, "\"speaker\": \"USER\", \"utterance\": \"Berkeley.\"",
                                "\"speaker\": \"SYSTEM\", \"utterance\": \"Berkeley.\"");
  write_file(dir / "dialogues_001.json", bad);
  EXPECT_THROW(load_dialogues(dir.path(), load_schemas(dir.path())), ParseError);
}

TEST(LoadDialogues, RejectsPlaceholderInValue) {
  TempDir dir;
  write_file(dir / "schema.json", kRideSchema);
  const auto bad = replace_once(kFourTurnDialogue, "\"$25\"", "\"$x\"");
  write_file(dir / "dialogues_001.json", bad);
  EXPECT_THROW(load_dialogues(dir.path(), load_schemas(dir.path())), ParseError);
}

Dialogue make_dialogue(const std::string& id, std::vector<std::string> services) {
  Dialogue d;
  d.dialogue_id = id;
  d.services = std::move(services);
  return d;
}

TEST(DeriveSgdNlg, DropsMultiServiceDialogues) {
  const auto out = derive_sgd_nlg(TrainPartition{{make_dialogue("d1", {"Restaurants_1"}),
                                                  make_dialogue("d2", {"Restaurants_1", "Hotels_1"})}});
  ASSERT_EQ(out.dialogues.size(), 1u);
  EXPECT_EQ(out.dialogues[0].dialogue_id, "d1");
  EXPECT_TRUE(out.warnings.empty());
}

TEST(DeriveSgdNlg, AllMultiDomainWarns) {
  const auto out = derive_sgd_nlg(TrainPartition{{make_dialogue("d1", {"A_1", "B_1"}), make_dialogue("d2", {"A_1", "C_1"})}});
  EXPECT_TRUE(out.dialogues.empty());
  EXPECT_EQ(out.warnings.size(), 1u);
}

TEST(DeriveSgdNlg, TenWithThreeMultiDomainKeepsSeven) {
  TrainPartition train;
  for (int i = 0; i < 10; ++i) {
    const bool multi = i == 2 || i == 5 || i == 9;
    train.dialogues.push_back(make_dialogue("d" + std::to_string(i), multi ? std::vector<std::string>{"A_1", "B_1"}
                                                                            : std::vector<std::string>{"A_1"}));
  }
  const auto out = derive_sgd_nlg(train);
  EXPECT_EQ(out.dialogues.size(), 7u);
  for (const auto& d : out.dialogues) EXPECT_TRUE(d.single_service());
}

}  // namespace
}  // namespace t2g2
