#include <doctest.h>

#include <sstream>

#include "afem/cli.hpp"

using namespace afem;

TEST_CASE("oracle suite passes on a fresh build") {
  std::ostringstream log;
  const ValidationReport report = validate_oracles(&log);
  INFO(log.str());
  CHECK(report.checks.size() == 5);
  for (const auto& c : report.checks) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
  CHECK(log.str().find("relative error") != std::string::npos);
  CHECK(log.str().find("-0.6777") != std::string::npos);
}
