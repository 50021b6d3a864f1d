#include "metocean/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "metocean/error.hpp"

namespace metocean {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(fmt::format("invalid {} in timestamp", what));
  return v;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(delim, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool is_missing_token(std::string_view s) {
  if (s.empty()) return true;
  const auto l = lower(s);
  return l == "nan" || l == "na" || l == "null";
}

bool is_intensity(Field f) { return !is_direction(f); }

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  text = trim(text);
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.remove_suffix(1);
  // YYYY-MM-DD[T ]HH:MM[:SS]
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
    throw Error(fmt::format("malformed ISO-8601 timestamp '{}'", text));
  }
  const int y = parse_int(text.substr(0, 4), "year");
  const int mo = parse_int(text.substr(5, 2), "month");
  const int d = parse_int(text.substr(8, 2), "day");
  const int h = parse_int(text.substr(11, 2), "hour");
  const int mi = parse_int(text.substr(14, 2), "minute");
  int s = 0;
  if (text.size() > 16) {
    if (text[16] != ':' || text.size() < 19) throw Error(fmt::format("malformed ISO-8601 timestamp '{}'", text));
    s = parse_int(text.substr(17, 2), "second");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw Error(fmt::format("invalid calendar date '{}'", text));
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

std::string_view field_name(Field f) {
  switch (f) {
    case Field::Hs: return "hs";
    case Field::Tp: return "tp";
    case Field::Dp: return "dp";
    case Field::Dm: return "dm";
    case Field::Ws: return "ws";
    case Field::Wdir: return "wdir";
    case Field::Cs: return "cs";
    case Field::Cdir: return "cdir";
  }
  return "?";
}

Field parse_field(std::string_view name) {
  const auto l = lower(trim(name));
  for (Field f : kAllFields) {
    if (field_name(f) == l) return f;
  }
  throw Error(fmt::format("unknown field '{}'", name));
}

bool is_direction(Field f) { return f == Field::Dp || f == Field::Dm || f == Field::Wdir || f == Field::Cdir; }

double SeaStateRecord::get(Field f) const {
  switch (f) {
    case Field::Hs: return hs;
    case Field::Tp: return tp;
    case Field::Dp: return dp;
    case Field::Dm: return dm;
    case Field::Ws: return ws;
    case Field::Wdir: return wdir;
    case Field::Cs: return cs;
    case Field::Cdir: return cdir;
  }
  return kMissing;
}

void SeaStateRecord::set(Field f, double value) {
  switch (f) {
    case Field::Hs: hs = value; break;
    case Field::Tp: tp = value; break;
    case Field::Dp: dp = value; break;
    case Field::Dm: dm = value; break;
    case Field::Ws: ws = value; break;
    case Field::Wdir: wdir = value; break;
    case Field::Cs: cs = value; break;
    case Field::Cdir: cdir = value; break;
  }
}

double normalize_degrees(double deg) {
  if (!std::isfinite(deg)) return deg;
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

Dataset::Dataset(std::vector<SeaStateRecord> records, std::chrono::seconds time_step, std::vector<Field> fields)
    : records_(std::move(records)), time_step_(time_step), fields_(std::move(fields)) {
  if (time_step_.count() <= 0) throw Error("time step must be positive");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (i > 0) {
      const auto dt = r.timestamp - records_[i - 1].timestamp;
      if (dt.count() <= 0) throw Error(fmt::format("non-monotone time axis at record {}", i));
      if (dt.count() % time_step_.count() != 0) throw Error(fmt::format("irregular time step at record {}", i));
    }
    for (Field f : fields_) {
      const double v = r.get(f);
      if (std::isnan(v)) continue;
      if (!std::isfinite(v)) throw Error(fmt::format("record {}: non-finite {}", i, field_name(f)));
      if (is_direction(f) && (v < 0.0 || v >= 360.0)) {
        throw Error(fmt::format("record {}: direction {} outside [0, 360)", i, field_name(f)));
      }
      if (is_intensity(f) && v < 0.0) throw Error(fmt::format("record {}: negative {}", i, field_name(f)));
      if (f == Field::Tp && v <= 0.0) throw Error(fmt::format("record {}: non-positive tp", i));
    }
  }
}

bool Dataset::has_field(Field f) const { return std::find(fields_.begin(), fields_.end(), f) != fields_.end(); }

Timestamp Dataset::start() const {
  if (records_.empty()) throw Error("empty dataset");
  return records_.front().timestamp;
}

Timestamp Dataset::end() const {
  if (records_.empty()) throw Error("empty dataset");
  return records_.back().timestamp;
}

std::size_t Dataset::grid_length() const {
  if (records_.empty()) return 0;
  return static_cast<std::size_t>((end() - start()) / time_step_) + 1;
}

double Dataset::years() const {
  constexpr double kSecondsPerYear = 365.25 * 86400.0;
  return static_cast<double>(grid_length()) * static_cast<double>(time_step_.count()) / kSecondsPerYear;
}

std::vector<double> Dataset::column(Field f) const {
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.get(f));
  return out;
}

std::vector<Timestamp> Dataset::times() const {
  std::vector<Timestamp> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.timestamp);
  return out;
}

std::vector<GapEntry> Dataset::gaps() const {
  std::vector<GapEntry> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (i > 0) {
      for (auto t = records_[i - 1].timestamp + time_step_; t < records_[i].timestamp; t += time_step_) {
        out.push_back(GapEntry{t, {}, true});
      }
    }
    GapEntry e{records_[i].timestamp, {}, false};
    for (Field f : fields_) {
      if (std::isnan(records_[i].get(f))) e.missing_fields.push_back(f);
    }
    if (!e.missing_fields.empty()) out.push_back(std::move(e));
  }
  return out;
}

ColumnMapping ColumnMapping::parse(std::string_view text) {
  ColumnMapping m;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw Error(fmt::format("mapping line {}: expected key = value", line_no));
    const auto key = lower(trim(l.substr(0, eq)));
    // The value is not trimmed for the delimiter so that a tab can be given.
    const auto raw_value = l.substr(eq + 1);
    const auto value = trim(raw_value);
    if (key == "delimiter") {
      if (value == "\\t" || value == "tab") {
        m.delimiter = '\t';
      } else if (value.size() == 1) {
        m.delimiter = value.front();
      } else {
        throw Error(fmt::format("mapping line {}: delimiter must be a single character", line_no));
      }
    } else if (key == "timestamp") {
      m.timestamp_column = std::string(value);
    } else {
      m.columns[parse_field(key)] = std::string(value);
    }
  }
  if (m.columns.empty()) throw Error("mapping defines no data columns");
  return m;
}

ColumnMapping ColumnMapping::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open mapping file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ColumnMapping ColumnMapping::identity(std::span<const Field> fields) {
  ColumnMapping m;
  for (Field f : fields) m.columns[f] = std::string(field_name(f));
  return m;
}

std::string ColumnMapping::to_text() const {
  std::string out;
  out += delimiter == '\t' ? std::string("delimiter = tab\n") : fmt::format("delimiter = {}\n", delimiter);
  out += fmt::format("timestamp = {}\n", timestamp_column);
  for (const auto& [f, col] : columns) out += fmt::format("{} = {}\n", field_name(f), col);
  return out;
}

Dataset read_csv(std::istream& in, const ColumnMapping& mapping) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV input");
  const auto header = split(line, mapping.delimiter);
  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < header.size(); ++i) col_index.emplace(std::string(header[i]), i);

  auto locate = [&](const std::string& name) {
    const auto it = col_index.find(name);
    if (it == col_index.end()) throw Error(fmt::format("unknown column '{}' (not in CSV header)", name));
    return it->second;
  };
  const std::size_t ts_col = locate(mapping.timestamp_column);
  std::vector<std::pair<Field, std::size_t>> data_cols;
  std::vector<Field> fields;
  for (const auto& [f, name] : mapping.columns) {
    data_cols.emplace_back(f, locate(name));
    fields.push_back(f);
  }

  std::vector<SeaStateRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line, mapping.delimiter);
    if (cells.size() != header.size()) {
      throw Error(fmt::format("malformed row {}: expected {} cells, found {}", row, header.size(), cells.size()));
    }
    SeaStateRecord rec;
    try {
      rec.timestamp = parse_timestamp(cells[ts_col]);
    } catch (const Error& e) {
      throw Error(fmt::format("malformed row {}: {}", row, e.what()));
    }
    for (const auto& [f, idx] : data_cols) {
      const auto cell = cells[idx];
      if (is_missing_token(cell)) {
        rec.set(f, SeaStateRecord::kMissing);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(fmt::format("malformed row {}: cannot parse {} value '{}'", row, field_name(f), cell));
      }
      if (!is_direction(f) && v < 0.0) {
        throw Error(fmt::format("malformed row {}: negative {} value", row, field_name(f)));
      }
      rec.set(f, is_direction(f) ? normalize_degrees(v) : v);
    }
    if (!records.empty() && rec.timestamp <= records.back().timestamp) {
      throw Error(fmt::format("non-monotone time axis at row {}", row));
    }
    records.push_back(rec);
  }
  if (records.empty()) throw Error("CSV contains no data rows");

  std::chrono::seconds step{3600};
  if (records.size() > 1) {
    step = std::chrono::seconds::max();
    for (std::size_t i = 1; i < records.size(); ++i) {
      step = std::min(step, std::chrono::duration_cast<std::chrono::seconds>(records[i].timestamp - records[i - 1].timestamp));
    }
  }
  return Dataset(std::move(records), step, std::move(fields));
}

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open CSV file '{}'", path.string()));
  return read_csv(in, mapping);
}

void write_csv(const Dataset& data, std::ostream& out, const ColumnMapping& mapping) {
  const char d = mapping.delimiter;
  out << mapping.timestamp_column;
  for (const auto& [f, name] : mapping.columns) out << d << name;
  out << '\n';
  for (const auto& r : data.records()) {
    out << format_timestamp(r.timestamp);
    for (const auto& [f, name] : mapping.columns) {
      out << d;
      const double v = r.get(f);
      if (!std::isnan(v)) out << fmt::format("{}", v);  // shortest round-trip representation
    }
    out << '\n';
  }
}

nlohmann::json gap_report_json(const Dataset& data) {
  auto report = nlohmann::json::array();
  for (const auto& g : data.gaps()) {
    nlohmann::json entry;
    entry["timestamp"] = format_timestamp(g.timestamp);
    auto fields = nlohmann::json::array();
    if (g.missing_record) {
      for (Field f : data.fields()) fields.push_back(field_name(f));
    } else {
      for (Field f : g.missing_fields) fields.push_back(field_name(f));
    }
    entry["missing_fields"] = std::move(fields);
    entry["missing_record"] = g.missing_record;
    report.push_back(std::move(entry));
  }
  return report;
}

double vector_mean_direction(std::span<const double> intensities, std::span<const double> directions_deg) {
  if (intensities.size() != directions_deg.size() || intensities.empty()) {
    throw Error("vector_mean_direction: sequences must have the same non-zero length");
  }
  constexpr double kDeg = std::numbers::pi / 180.0;
  double sx = 0.0, sy = 0.0, total = 0.0;
  for (std::size_t i = 0; i < intensities.size(); ++i) {
    if (!(intensities[i] >= 0.0)) throw Error("vector_mean_direction: negative or missing intensity");
    sx += intensities[i] * std::cos(directions_deg[i] * kDeg);
    sy += intensities[i] * std::sin(directions_deg[i] * kDeg);
    total += intensities[i];
  }
  if (total == 0.0) throw Error("undefined mean direction");
  return normalize_degrees(std::atan2(sy, sx) / kDeg);
}

}  // namespace metocean
