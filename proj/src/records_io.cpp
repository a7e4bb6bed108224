#include "fleetpricer/records_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "fleetpricer/error.hpp"

namespace fleetpricer {

namespace {

constexpr std::array<const char*, 10> kColumns = {
    "booking_date", "pickup_date", "lor",       "offered_multiplier", "offers",
    "reservations", "revenue_per_day", "branch_type", "car_group",   "peak_flag"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

[[noreturn]] void row_error(std::size_t row, const std::string& column, const std::string& why) {
  throw Error(ErrorCode::SchemaError,
              "row " + std::to_string(row) + ", column '" + column + "': " + why);
}

int parse_int(const std::string& s, std::size_t row, const char* column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) row_error(row, column, "not an integer");
  return v;
}

double parse_real(const std::string& s, std::size_t row, const char* column) {
  if (s.empty()) row_error(row, column, "empty value");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) row_error(row, column, "not a number");
  return v;
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const BookingRecord> records) {
  for (std::size_t c = 0; c < kColumns.size(); ++c) out << (c ? "," : "") << kColumns[c];
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << format_iso_date(r.booking_date) << ',' << format_iso_date(r.pickup_date) << ','
        << r.lor << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.offered_multiplier);
    out << buf << ',' << r.offers << ',' << r.reservations << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.revenue_per_day);
    out << buf << ',' << r.branch_type << ',' << r.car_group << ',' << (r.peak ? 1 : 0) << '\n';
  }
}

void write_records_csv(const std::filesystem::path& path, std::span<const BookingRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_records_csv(out, records);
}

std::vector<BookingRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "empty file, header missing");
  const auto header = split(strip_cr(line));
  std::array<std::size_t, kColumns.size()> pos{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t found = header.size();
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == kColumns[c]) found = h;
    }
    if (found == header.size()) {
      throw Error(ErrorCode::SchemaError, std::string("missing column '") + kColumns[c] + "'");
    }
    pos[c] = found;
  }

  std::vector<BookingRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(cells.size()));
    }
    auto cell = [&](std::size_t c) -> const std::string& { return cells[pos[c]]; };
    BookingRecord r;
    try {
      r.booking_date = parse_iso_date(cell(0));
    } catch (const Error&) {
      row_error(row, kColumns[0], "malformed date '" + cell(0) + "'");
    }
    try {
      r.pickup_date = parse_iso_date(cell(1));
    } catch (const Error&) {
      row_error(row, kColumns[1], "malformed date '" + cell(1) + "'");
    }
    r.lor = parse_int(cell(2), row, kColumns[2]);
    r.offered_multiplier = parse_real(cell(3), row, kColumns[3]);
    r.offers = parse_int(cell(4), row, kColumns[4]);
    r.reservations = parse_int(cell(5), row, kColumns[5]);
    r.revenue_per_day = parse_real(cell(6), row, kColumns[6]);
    r.branch_type = cell(7);
    r.car_group = cell(8);
    const std::string& peak = cell(9);
    if (peak != "0" && peak != "1") row_error(row, kColumns[9], "expected 0 or 1");
    r.peak = peak == "1";
    try {
      r.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<BookingRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_records_csv(in);
}

}  // namespace fleetpricer
