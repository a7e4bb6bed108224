#include "fleetpricer/dates.hpp"

#include <chrono>
#include <cstdio>

#include "fleetpricer/error.hpp"

namespace fleetpricer {

namespace {

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return !s.empty();
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

Date parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !all_digits(text.substr(0, 4)) ||
      !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
    throw Error(ErrorCode::SchemaError, "malformed date '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{to_int(text.substr(0, 4))},
                           month{static_cast<unsigned>(to_int(text.substr(5, 2)))},
                           day{static_cast<unsigned>(to_int(text.substr(8, 2)))}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::SchemaError, "invalid calendar date '" + std::string(text) + "'");
  }
  return Date(static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count()));
}

std::string format_iso_date(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d.days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoMatchingRule: return "NoMatchingRule";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::NonPositiveData: return "NonPositiveData";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::SingularInput: return "SingularInput";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::MissingFutureRegressor: return "MissingFutureRegressor";
    case ErrorCode::UnknownPickupDate: return "UnknownPickupDate";
    case ErrorCode::NonConcave: return "NonConcave";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace fleetpricer
