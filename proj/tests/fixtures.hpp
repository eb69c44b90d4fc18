#pragma once

#include "surge/bundle.hpp"
#include "surge/synth.hpp"

namespace testutil {

inline std::vector<surge::OffsetSeries> offsets_of(const std::vector<surge::StationSeries>& st) {
  std::vector<surge::OffsetSeries> out;
  for (const auto& s : st) out.push_back(surge::compute_offsets(s));
  return out;
}

/// Small trained bundle on a 12-station synthetic field; seconds to build.
inline surge::TrainedBundle tiny_bundle(std::uint64_t seed = 5, std::size_t epochs = 3) {
  surge::FieldSpec f;
  f.n_stations = 12;
  const auto data = surge::generate_dataset(f);
  surge::TrainConfig c;
  c.n_layers = 2;
  c.hidden = 6;
  c.epochs = epochs;
  c.batch_size = 5;
  c.seed = seed;
  const auto off = offsets_of(data.stations);
  const std::vector<surge::OffsetSeries> train(off.begin(), off.begin() + 9), test(off.begin() + 9, off.end());
  return surge::train_bundle(train, test, c);
}

}  // namespace testutil
