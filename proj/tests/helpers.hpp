#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "metocean/ingest.hpp"
#include "metocean/random.hpp"

namespace testing {

inline metocean::Timestamp hour(long h) {
  using namespace std::chrono;
  return sys_seconds{sys_days{year{2000} / 1 / 1}} + hours{h};
}

/// Hourly dataset whose hs column is `hs`; ws and cs default to zero and
/// every direction to 45 degrees.
inline metocean::Dataset hourly_dataset(const std::vector<double>& hs, const std::vector<double>& ws = {},
                                        const std::vector<double>& cs = {}) {
  std::vector<metocean::SeaStateRecord> recs;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    metocean::SeaStateRecord r;
    r.timestamp = hour(static_cast<long>(i));
    r.hs = hs[i];
    r.ws = ws.empty() ? 0.0 : ws[i];
    r.cs = cs.empty() ? 0.0 : cs[i];
    r.dm = r.wdir = r.cdir = 45.0;
    recs.push_back(r);
  }
  using metocean::Field;
  return metocean::Dataset(std::move(recs), std::chrono::hours{1},
                           {Field::Hs, Field::Dm, Field::Ws, Field::Wdir, Field::Cs, Field::Cdir});
}

/// Fresh scratch directory below the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("metocean_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
