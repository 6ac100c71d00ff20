#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pscore/errors.hpp"
#include "pscore/textio.hpp"
#include "support/temp_dir.hpp"

using pscore::csv_escape;
using pscore::format_double;
using pscore::parse_double;

TEST_CASE("format_double round-trips exactly and prefers short forms") {
  const std::vector<double> values = {0.0,       1.0,    -1.0,     0.5,         0.1,
                                      1.0 / 3.0, 1e300,  -2.5e-17, 1234567.875, 6.02214076e23,
                                      -0.0,      3.14159, 1e-300};
  for (double v : values) {
    double back = 0.0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3.0) == "-3");
}

TEST_CASE("parse_double consumes the whole token or fails") {
  double out = 0.0;
  CHECK(parse_double("1.5", out));
  CHECK(out == 1.5);
  CHECK(parse_double("-2e3", out));
  CHECK(out == -2000.0);
  CHECK_FALSE(parse_double("", out));
  CHECK_FALSE(parse_double("abc", out));
  CHECK_FALSE(parse_double("1.5x", out));
  CHECK_FALSE(parse_double("1.5 ", out));
  CHECK_FALSE(parse_double("--3", out));
}

TEST_CASE("csv_escape quotes exactly the fields that need it") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
  CHECK(csv_escape("") == "");
}

TEST_CASE("CSV write/read round-trips quoted content") {
  test_support::TempDir dir;
  const std::string path = dir.file("table.csv");
  const std::vector<std::vector<std::string>> rows = {
      {"name", "note"},
      {"alpha", "plain"},
      {"beta", "comma, inside"},
      {"gamma", "quote \" inside"},
      {"delta", "line\nbreak"},
      {"", "leading empty"},
  };
  pscore::write_csv(path, rows);
  CHECK(pscore::read_csv(path) == rows);
}

TEST_CASE("read_csv fails loudly on a missing file") {
  CHECK_THROWS_AS(pscore::read_csv("/nonexistent/missing.csv"), pscore::DataError);
}

TEST_CASE("text file helpers round-trip binary-ish content") {
  test_support::TempDir dir;
  const std::string path = dir.file("blob.txt");
  const std::string content = "first line\nsecond\t line\n";
  pscore::write_text_file(path, content);
  CHECK(pscore::read_text_file(path) == content);
}

TEST_CASE("ensure_directory creates parents and tolerates repeats") {
  test_support::TempDir dir;
  const std::string nested = dir.file("a/b/c");
  pscore::ensure_directory(nested);
  pscore::ensure_directory(nested);
  CHECK(std::filesystem::is_directory(nested));

  const std::string blocker = dir.file("file");
  pscore::write_text_file(blocker, "x");
  CHECK_THROWS(pscore::ensure_directory(blocker));
}
