/**
 * @file ingest.hpp
 * @brief Sea-state records, datasets on a regular time grid, CSV ingestion.
 *
 * Intensities are in physical units (m, m/s, s); directions are stored in
 * degrees normalized to [0, 360). Missing values are NaN and are reported in
 * the gap report, never interpolated.
 */
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metocean {

using Timestamp = std::chrono::sys_seconds;

/// Parse "YYYY-MM-DDTHH:MM[:SS][Z]" (a space is accepted instead of 'T').
Timestamp parse_timestamp(std::string_view text);
/// Format as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

enum class Field : std::uint8_t { Hs, Tp, Dp, Dm, Ws, Wdir, Cs, Cdir };

inline constexpr std::array<Field, 8> kAllFields{Field::Hs, Field::Tp, Field::Dp,   Field::Dm,
                                                 Field::Ws, Field::Wdir, Field::Cs, Field::Cdir};

std::string_view field_name(Field f);
/// Case-insensitive inverse of `field_name`; throws on unknown names.
Field parse_field(std::string_view name);
bool is_direction(Field f);

/// One time step of the environmental state.
struct SeaStateRecord {
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  Timestamp timestamp{};
  double hs = kMissing;    ///< significant wave height [m]
  double tp = kMissing;    ///< peak period [s]
  double dp = kMissing;    ///< peak wave direction [deg]
  double dm = kMissing;    ///< mean wave direction [deg]
  double ws = kMissing;    ///< wind speed [m/s]
  double wdir = kMissing;  ///< wind direction [deg]
  double cs = kMissing;    ///< current speed [m/s]
  double cdir = kMissing;  ///< current direction [deg]

  [[nodiscard]] double get(Field f) const;
  void set(Field f, double value);
};

/// Normalize an angle in degrees to [0, 360).
double normalize_degrees(double deg);

struct GapEntry {
  Timestamp timestamp{};
  /// Empty when the whole record is absent from the time grid.
  std::vector<Field> missing_fields;
  bool missing_record = false;
};

/// Ordered records on a constant time step.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every record invariant. `fields` lists the populated columns.
  Dataset(std::vector<SeaStateRecord> records, std::chrono::seconds time_step, std::vector<Field> fields);

  [[nodiscard]] const std::vector<SeaStateRecord>& records() const noexcept { return records_; }
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
  [[nodiscard]] std::chrono::seconds time_step() const noexcept { return time_step_; }
  [[nodiscard]] const std::vector<Field>& fields() const noexcept { return fields_; }
  [[nodiscard]] bool has_field(Field f) const;
  [[nodiscard]] Timestamp start() const;
  [[nodiscard]] Timestamp end() const;
  /// Covered duration (end - start + one step) in years of 365.25 days.
  [[nodiscard]] double years() const;
  /// Number of grid steps between start and end, inclusive.
  [[nodiscard]] std::size_t grid_length() const;

  [[nodiscard]] std::vector<double> column(Field f) const;
  [[nodiscard]] std::vector<Timestamp> times() const;
  /// Missing fields per record and grid steps absent from the file.
  [[nodiscard]] std::vector<GapEntry> gaps() const;

 private:
  std::vector<SeaStateRecord> records_;
  std::chrono::seconds time_step_{0};
  std::vector<Field> fields_;
};

/// Column mapping: which CSV header supplies each field.
///
/// Text form is one `key = value` per line, `#` starts a comment:
///
///     delimiter = ,
///     timestamp = time
///     hs = Hs_m
///     dm = Dir_deg
struct ColumnMapping {
  char delimiter = ',';
  std::string timestamp_column = "timestamp";
  std::map<Field, std::string> columns;

  static ColumnMapping parse(std::string_view text);
  static ColumnMapping from_file(const std::filesystem::path& path);
  /// Identity mapping (header = field name) for the given fields.
  static ColumnMapping identity(std::span<const Field> fields);
  [[nodiscard]] std::string to_text() const;
};

Dataset read_csv(std::istream& in, const ColumnMapping& mapping);
Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
/// Writes the mapped columns with round-trip precision; NaN is written as empty.
void write_csv(const Dataset& data, std::ostream& out, const ColumnMapping& mapping);

/// JSON list of {timestamp, missing_fields}.
nlohmann::json gap_report_json(const Dataset& data);

/// Intensity-weighted vector mean of directions, in degrees [0, 360).
double vector_mean_direction(std::span<const double> intensities, std::span<const double> directions_deg);

}  // namespace metocean
