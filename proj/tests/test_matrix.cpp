#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "irtcat/response_matrix.hpp"
#include "irtcat/rng.hpp"

using namespace irtcat;

TEST_CASE("csv parsing handles values, blanks, and a trailing newline") {
  const std::string csv =
      "model_id,q1,q2,q3\n"
      "alpha,1,0,1\n"
      "beta,0,,1\n";
  const ResponseMatrix m = matrix_from_csv(csv);
  CHECK(m.n_models() == 2);
  CHECK(m.n_items() == 3);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(1, 1) == ResponseMatrix::kMissing);
  CHECK(m.row_complete(0));
  CHECK_FALSE(m.row_complete(1));
  CHECK(m.row_total(0) == 2);
  CHECK(m.row_total(1) == 1);  // missing cells do not count
}

TEST_CASE("csv rejects malformed cells with their location") {
  const std::string csv =
      "model_id,q1,q2\n"
      "alpha,1,0\n"
      "beta,2,1\n";
  try {
    (void)matrix_from_csv(csv, "fixture.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fixture.csv") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("q1") != std::string::npos);
  }
}

TEST_CASE("csv rejects structural damage") {
  CHECK_THROWS_AS((void)matrix_from_csv(""), ParseError);
  CHECK_THROWS_AS((void)matrix_from_csv("wrong,q1\na,1\n"), ParseError);
  CHECK_THROWS_AS((void)matrix_from_csv("model_id\n"), ParseError);
  CHECK_THROWS_AS((void)matrix_from_csv("model_id,q1\n"), ParseError);          // no rows
  CHECK_THROWS_AS((void)matrix_from_csv("model_id,q1\na,1\na,0\n"), ParseError);  // dup model
  CHECK_THROWS_AS((void)matrix_from_csv("model_id,q1,q1\na,1,0\n"), ParseError);  // dup item
  CHECK_THROWS_AS((void)matrix_from_csv("model_id,q1,q2\na,1\n"), ParseError);    // short row
}

TEST_CASE("submatrix selection reorders rows and columns") {
  const ResponseMatrix m = matrix_from_csv(
      "model_id,q1,q2,q3\n"
      "a,1,0,1\n"
      "b,0,1,0\n"
      "c,1,1,1\n");
  const ResponseMatrix s = m.select({2, 0}, {1, 2});
  CHECK(s.model_ids() == std::vector<std::string>{"c", "a"});
  CHECK(s.item_ids() == std::vector<std::string>{"q2", "q3"});
  CHECK(s.at(0, 0) == 1);
  CHECK(s.at(1, 0) == 0);
  CHECK(s.at(1, 1) == 1);
}

TEST_CASE("csv round-trip is lossless") {
  const std::string csv =
      "model_id,q1,q2\n"
      "a,1,\n"
      "b,0,1\n";
  const ResponseMatrix m = matrix_from_csv(csv);
  CHECK(matrix_to_csv(m) == csv);
  CHECK(matrix_from_csv(matrix_to_csv(m)) == m);
}

TEST_CASE("file save and load round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "irtcat_matrix_test";
  fs::create_directories(dir);
  const std::string path = (dir / "m.csv").string();

  const ResponseMatrix m = matrix_from_csv("model_id,q1\nrow,1\n");
  save_matrix(m, path);
  CHECK(load_matrix(path) == m);
  CHECK_THROWS_AS((void)load_matrix((dir / "missing.csv").string()), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("a leaderboard-scale matrix survives a round-trip") {
  // 4,680 models x 1,046 items, the largest shape the pipeline must carry
  const int n_models = 4680, n_items = 1046;
  std::vector<std::string> models, items;
  models.reserve(n_models);
  items.reserve(n_items);
  for (int i = 0; i < n_models; ++i) models.push_back("m" + std::to_string(i));
  for (int j = 0; j < n_items; ++j) items.push_back("q" + std::to_string(j));
  ResponseMatrix m(std::move(models), std::move(items));
  CounterRng rng(4680);
  for (int i = 0; i < n_models; ++i)
    for (int j = 0; j < n_items; ++j) m.set(i, j, rng.next_double() < 0.6 ? 1 : 0);

  const ResponseMatrix back = matrix_from_csv(matrix_to_csv(m));
  CHECK(back == m);
  CHECK(back.n_models() == n_models);
  CHECK(back.n_items() == n_items);
}
