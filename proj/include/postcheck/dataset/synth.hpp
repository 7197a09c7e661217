#pragma once

#include <cstdint>
#include <vector>

#include "postcheck/dataset/records.hpp"

namespace postcheck::dataset {

// Knobs for the synthetic corpus. `signal` scales every label dependence: at
// 0 all features are drawn independently of the label.
struct SignalSpec {
  double signal = 1.0;
  double unreliable_share = 934.0 / 5172.0;
  double users_per_post = 0.2;
  double missing_rate = 0.02;
  double image_rate = 1287.0 / 5172.0;
  std::int64_t start_time = 1577836800;  // 2020-01-01 UTC
  std::int64_t time_span = 300LL * 86400;
};

// Labeled records whose label correlates with planted text tokens, a
// per-user reliability propensity and engagement counts. Image refs encode
// their size as "synthetic://<w>x<h>/<name>" (see features::synthetic_image_size).
std::vector<RawRecord> synthesize_corpus(int n, std::uint64_t seed, const SignalSpec& spec = {});

}  // namespace postcheck::dataset
