#pragma once

// A trained model plus everything inference needs: scalers, coordinate
// bounds, reshape dims, config and loss history.

#include "surge/config.hpp"
#include "surge/ingest.hpp"
#include "surge/preprocess.hpp"
#include "surge/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace surge {

inline constexpr const char* kBundleVersion = "surge-bundle/1";

struct TrainedBundle {
  std::string version = kBundleVersion;
  TimeGan model;
  MinMaxScaler train_scaler;
  std::optional<MinMaxScaler> test_scaler;  // absent when fit on train only
  CoordBounds bounds;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t series_length = 0;  // T before any truncation
  TrainConfig config;
  LossTrace history;

  bool loaded() const { return rows > 0 && cols > 0 && !train_scaler.min.empty(); }

  /// Scaler for held-out stations: the test pool scaler unless fit on train.
  const MinMaxScaler& scaler_for_test() const { return test_scaler ? *test_scaler : train_scaler; }

  void check_consistent() const {
    if (version != kBundleVersion) throw FormatError("bundle version '" + version + "' is not " + kBundleVersion);
    if (!loaded()) throw StateError("bundle is empty");
    if (model.shape.rows != rows || model.shape.cols != cols) throw DimensionError("bundle: model shape disagrees with rows/cols");
    if (rows * cols > series_length) throw DimensionError("bundle: rows*cols exceeds the series length");
    if (train_scaler.features() != 1 || bounds.scaler.features() != 2) throw DimensionError("bundle: scaler feature counts");
  }
};

inline bool float32_exact(double v) { return static_cast<double>(static_cast<float>(v)) == v; }

/// Rounds every weight to the nearest float32 so that float32 checkpoint
/// storage is lossless.
inline void snap_to_float32(TimeGan& m) {
  for (Component* c : m.components()) {
    for (Matrix* p : c->params()) {
      for (Index i = 0; i < p->size(); ++i) p->data()[i] = static_cast<double>(static_cast<float>(p->data()[i]));
    }
  }
}

inline bool is_float32_snapped(const TimeGan& m) {
  for (const Component* c : m.components()) {
    for (const Matrix* p : c->params()) {
      for (Index i = 0; i < p->size(); ++i) {
        if (!float32_exact(p->data()[i])) return false;
      }
    }
  }
  return true;
}

/// Shapes and scalers derived from the train (and optional test) pools.
struct PreparedData {
  std::size_t series_length = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  MinMaxScaler train_scaler;
  std::optional<MinMaxScaler> test_scaler;
  CoordBounds bounds;
  std::vector<OffsetSample> train_samples;
};

inline PreparedData prepare_training_data(const std::vector<OffsetSeries>& train, const std::vector<OffsetSeries>& test,
                                          const TrainConfig& config) {
  if (train.empty()) throw DataError("training: no training stations");
  const auto summary = validate_dataset(train);
  if (!summary.uniform_length) throw DataError("training: stations have unequal series lengths");
  PreparedData d;
  d.series_length = *summary.uniform_length;
  for (const auto& s : test) {
    if (s.values.size() != d.series_length) {
      throw DataError("training: test station " + s.station_id + " has length " + std::to_string(s.values.size()) +
                      ", expected " + std::to_string(d.series_length));
    }
  }
  d.rows = config.rows ? config.rows : default_rows(d.series_length, config.truncate);
  if (d.series_length % d.rows != 0 && !config.truncate) {
    throw DataError("training: rows=" + std::to_string(d.rows) + " does not divide T=" + std::to_string(d.series_length) +
                    "; enable truncation");
  }
  d.cols = d.series_length / d.rows;
  if (d.rows < 2 || d.cols == 0) throw DataError("training: need at least two rows and one column");
  d.bounds = CoordBounds::fit(train);
  d.train_scaler = fit_offset_scaler(train);
  if (!config.fit_on_train && !test.empty()) d.test_scaler = fit_offset_scaler(test);
  d.train_samples = make_samples(train, d.train_scaler, d.bounds, d.rows, config.truncate);
  return d;
}

inline ModelShape model_shape(const TrainConfig& c, std::size_t rows, std::size_t cols) {
  return ModelShape{rows, cols, c.hidden, c.n_layers, c.supervisor_space};
}

/// Full pipeline: prepare, build, run the three phases, snap weights.
inline TrainedBundle train_bundle(const std::vector<OffsetSeries>& train, const std::vector<OffsetSeries>& test,
                                  const TrainConfig& config) {
  config.validate();
  auto data = prepare_training_data(train, test, config);
  Trainer trainer(TimeGan::build(model_shape(config, data.rows, data.cols), derive_seed(config.seed, 1)), config);
  trainer.fit(data.train_samples);

  TrainedBundle b;
  b.model = trainer.model();
  snap_to_float32(b.model);
  b.train_scaler = data.train_scaler;
  b.test_scaler = data.test_scaler;
  b.bounds = data.bounds;
  b.rows = data.rows;
  b.cols = data.cols;
  b.series_length = data.series_length;
  b.config = config;
  b.history = trainer.history();
  return b;
}

}  // namespace surge
