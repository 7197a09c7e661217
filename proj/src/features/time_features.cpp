#include <chrono>

#include "postcheck/common/error.hpp"
#include "postcheck/features.hpp"

namespace postcheck::features {

TimeFeatures decode_timestamp(std::int64_t ts) {
  if (ts < 0) throw ConfigError("decode_timestamp: negative timestamp " + std::to_string(ts));
  using namespace std::chrono;
  const sys_seconds t{seconds{ts}};
  const sys_days day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss<seconds> tod{t - day_start};

  TimeFeatures f;
  f.year = static_cast<int>(ymd.year());
  f.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  f.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  f.hour = static_cast<int>(tod.hours().count());
  f.minute = static_cast<int>(tod.minutes().count());
  f.weekday = static_cast<int>(weekday{day_start}.iso_encoding()) - 1;
  f.is_weekend = f.weekday >= 5 ? 1 : 0;
  return f;
}

}  // namespace postcheck::features
