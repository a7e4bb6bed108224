#include <sstream>

#include "doctest.h"
#include "fleetpricer/dates.hpp"
#include "fleetpricer/error.hpp"
#include "fleetpricer/records_io.hpp"
#include "support.hpp"

using namespace fleetpricer;

TEST_CASE("iso dates round trip") {
  for (const char* s : {"1970-01-01", "2000-02-29", "2024-12-31", "1969-12-31", "2100-03-01"}) {
    CHECK(format_iso_date(parse_iso_date(s)) == s);
  }
  CHECK(parse_iso_date("1970-01-02").days == 1);
  CHECK(parse_iso_date("2024-03-01") - parse_iso_date("2024-02-28") == 2);
  CHECK_THROWS_AS(parse_iso_date("2023-02-29"), Error);
  CHECK_THROWS_AS(parse_iso_date("2023-13-01"), Error);
  CHECK_THROWS_AS(parse_iso_date("20230101"), Error);
}

TEST_CASE("records csv round trip is lossless") {
  const RunConfig c = testing::small_config();
  const MarketScenario s = make_scenario(c);
  RandomizationConfig r = c.randomization;
  const auto recs = generate_history(s, r, 21);
  std::stringstream buf;
  write_records_csv(buf, recs);
  const auto back = read_records_csv(buf);
  REQUIRE(back.size() == recs.size());
  CHECK(back == recs);
}

TEST_CASE("schema errors name the column or the row") {
  const std::string header =
      "booking_date,pickup_date,lor,offered_multiplier,offers,reservations,revenue_per_day,branch_type,"
      "car_group,peak_flag\n";
  const std::string good = "2024-01-01,2024-01-03,2,1.000000,10,3,55.000000,airport,economy,0\n";

  std::stringstream missing("booking_date,pickup_date,lor,offered_multiplier,offers,revenue_per_day,"
                            "branch_type,car_group,peak_flag\n");
  try {
    read_records_csv(missing);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(std::string(e.what()).find("reservations") != std::string::npos);
  }

  std::string body = header;
  for (int i = 1; i < 17; ++i) body += good;
  body += "2024-02-30,2024-01-03,2,1.000000,10,3,55.000000,airport,economy,0\n";
  std::stringstream bad(body);
  try {
    read_records_csv(bad);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(std::string(e.what()).find("17") != std::string::npos);
  }
}

TEST_CASE("missing file is an io error") {
  try {
    read_records_csv(std::filesystem::path("/nonexistent/records.csv"));
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
