#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fleetpricer/market.hpp"

namespace fleetpricer {

/// Booking history CSV: booking_date,pickup_date,lor,offered_multiplier,
/// offers,reservations,revenue_per_day,branch_type,car_group,peak_flag.
/// Reals are written with 6 decimals, dates as ISO-8601.
void write_records_csv(std::ostream& out, std::span<const BookingRecord> records);
void write_records_csv(const std::filesystem::path& path, std::span<const BookingRecord> records);

/// Throws SchemaError naming the missing column or the offending data row
/// (1-based, header excluded) and IoError when the file cannot be opened.
std::vector<BookingRecord> read_records_csv(std::istream& in);
std::vector<BookingRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace fleetpricer
