#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "harness.hpp"
#include "irtcat/bank.hpp"
#include "json.hpp"

using namespace irtcat;

TEST_CASE("bank rejects duplicate ids and malformed parameters") {
  ItemBank bank;
  bank.add({"q1", {1.0, 0.0, 0.1}, 1, false, ""});
  CHECK_THROWS_AS(bank.add({"q1", {1.0, 0.5, 0.0}, 1, false, ""}), ConfigError);
  CHECK_THROWS_AS(bank.add({"", {1.0, 0.0, 0.0}, 1, false, ""}), ConfigError);
  CHECK_THROWS_AS(bank.add({"q2", {1.0, 0.0, 1.0}, 1, false, ""}), ConfigError);
  CHECK_THROWS_AS(
      bank.add({"q3", {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0}, 1, false, ""}),
      ConfigError);
}

TEST_CASE("items outside selection bounds are kept but never operational") {
  ItemBank bank;
  bank.add({"ok", {1.2, 1.0, 0.2}, 1, false, ""});
  bank.add({"flat", {-0.3, 0.0, 0.0}, 1, false, ""});   // nonpositive slope
  bank.add({"far", {1.0, 5.5, 0.0}, 1, false, ""});     // |b| beyond the cap
  bank.add({"guessy", {1.0, 0.0, 0.65}, 1, false, ""});  // c beyond the cap
  CHECK(bank.size() == 4);
  CHECK(bank.item("flat").filtered);
  CHECK(bank.item("far").filtered);
  CHECK(bank.item("guessy").filtered);
  const auto ops = bank.operational();
  REQUIRE(ops.size() == 1);
  CHECK(bank.item(ops[0]).id == "ok");
}

TEST_CASE("bank lookup by id and index") {
  ItemBank bank = harness::sample_bank(6, 71);
  CHECK(bank.contains("it0003"));
  CHECK(bank.find("it0003") == 3);
  CHECK(bank.find("ghost") == -1);
  CHECK(bank.index_of("it0005") == 5);
  CHECK_THROWS_AS((void)bank.index_of("ghost"), LookupError);
  CHECK_THROWS_AS((void)bank.item("ghost"), LookupError);
}

TEST_CASE("json round-trip preserves every field and is byte-stable") {
  ItemBank bank = harness::sample_bank(9, 73);
  bank.item(2).filtered = true;
  bank.item(2).notes = "low discrimination";
  bank.item(4).partition = 2;
  bank.set_scale(-0.12, 1.07);

  const std::string text = bank_to_json(bank);
  const ItemBank back = bank_from_json(text);
  REQUIRE(back.size() == bank.size());
  for (int i = 0; i < bank.size(); ++i) {
    CHECK(back.item(i).id == bank.item(i).id);
    CHECK(back.item(i).params.a == bank.item(i).params.a);
    CHECK(back.item(i).params.b == bank.item(i).params.b);
    CHECK(back.item(i).params.c == bank.item(i).params.c);
    CHECK(back.item(i).partition == bank.item(i).partition);
    CHECK(back.item(i).filtered == bank.item(i).filtered);
    CHECK(back.item(i).notes == bank.item(i).notes);
  }
  CHECK(back.scale_mean() == bank.scale_mean());
  CHECK(back.scale_sd() == bank.scale_sd());
  CHECK(bank_to_json(back) == text);
}

TEST_CASE("bank parsing fails fast on schema and payload damage") {
  ItemBank bank = harness::sample_bank(3, 79);
  auto doc = nlohmann::json::parse(bank_to_json(bank));

  auto wrong_version = doc;
  wrong_version["schema_version"] = "999";
  CHECK_THROWS_AS((void)bank_from_json(wrong_version.dump()), ParseError);

  auto bad_number = doc;
  bad_number["items"][0]["a"] = "fast";
  CHECK_THROWS_AS((void)bank_from_json(bad_number.dump()), ParseError);

  auto missing_field = doc;
  missing_field["items"][1].erase("b");
  CHECK_THROWS_AS((void)bank_from_json(missing_field.dump()), ParseError);

  CHECK_THROWS_AS((void)bank_from_json("not json at all"), ParseError);
}

TEST_CASE("bank file save and load") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "irtcat_bank_test";
  fs::create_directories(dir);
  const std::string path = (dir / "bank.json").string();

  ItemBank bank = harness::sample_bank(5, 83);
  save_bank(bank, path);
  const ItemBank back = load_bank(path);
  CHECK(bank_to_json(back) == bank_to_json(bank));

  CHECK_THROWS_AS((void)load_bank((dir / "missing.json").string()), ConfigError);
  fs::remove_all(dir);
}
