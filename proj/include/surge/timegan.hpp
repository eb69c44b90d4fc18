#pragma once

// The five adversarial components (embedder, recovery, generator, supervisor,
// discriminator). Each fuses an optional static network over the coordinate
// pair (or static latent) with a GRU stack over the per-row temporal input.

#include "surge/nn/dense.hpp"
#include "surge/nn/gru.hpp"

#include <optional>
#include <string>
#include <vector>

namespace surge {

enum class ComponentKind { Embedder, Recovery, Generator, Supervisor, Discriminator };
enum class SupervisorSpace { latent, data };

inline const char* component_name(ComponentKind k) {
  switch (k) {
    case ComponentKind::Embedder: return "embedder";
    case ComponentKind::Recovery: return "recovery";
    case ComponentKind::Generator: return "generator";
    case ComponentKind::Supervisor: return "supervisor";
    case ComponentKind::Discriminator: return "discriminator";
  }
  return "?";
}

/// Architecture of one component.
struct NetSpec {
  ComponentKind component = ComponentKind::Embedder;
  std::size_t n_gru_layers = 0;
  std::size_t hidden = 0;
  std::size_t out_cols = 0;       // head width
  bool has_static_net = false;
  std::size_t static_in = 0;
  std::size_t static_out = 0;
  std::size_t temporal_in = 0;    // width before the static columns are appended
  bool bidirectional = false;
  bool lift_to_hidden = false;    // supervisor in latent space

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Shapes shared by the whole model.
struct ModelShape {
  std::size_t rows = 5;
  std::size_t cols = 21;
  std::size_t hidden = 256;
  std::size_t n_layers = 5;  // embedder / recovery / generator
  SupervisorSpace supervisor_space = SupervisorSpace::latent;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

inline constexpr std::size_t kStaticLatent = 4;
inline constexpr std::size_t kCoordDims = 2;

inline NetSpec make_spec(ComponentKind kind, const ModelShape& s) {
  if (s.n_layers < 2) throw DataError("model: at least two GRU layers are required (the supervisor has one fewer)");
  NetSpec n;
  n.component = kind;
  n.hidden = s.hidden;
  switch (kind) {
    case ComponentKind::Embedder:
      n = {kind, s.n_layers, s.hidden, s.cols, true, kCoordDims, kStaticLatent, s.cols, false, false};
      break;
    case ComponentKind::Generator:
      // noise has one column per data column
      n = {kind, s.n_layers, s.hidden, s.cols, true, kCoordDims, kStaticLatent, s.cols, false, false};
      break;
    case ComponentKind::Recovery:
      n = {kind, s.n_layers, s.hidden, s.cols, true, kStaticLatent, kCoordDims, s.hidden, false, false};
      break;
    case ComponentKind::Supervisor:
      n = {kind, s.n_layers - 1, s.hidden, s.cols, false, 0, 0, s.hidden, false,
           s.supervisor_space == SupervisorSpace::latent};
      break;
    case ComponentKind::Discriminator:
      n = {kind, 2, s.hidden, 1, false, 0, 0, s.hidden, true, false};
      break;
  }
  return n;
}

/// Weights of one component plus its forward/backward passes.
struct Component {
  using Dense = nn::DenseLayer<double>;
  using Gru = nn::GruLayer<double>;

  NetSpec spec;
  std::optional<Dense> static_net;
  std::vector<Gru> temporal;
  Dense head;
  std::optional<Dense> lift;

  /// Every intermediate a forward pass produces.
  struct Output {
    Matrix static_out;  // 1 x static_out (empty without static net)
    Matrix latent;      // last GRU layer output
    Matrix head;        // head activation
    Matrix out;         // lift(head) when lifted, else head
  };

  struct Tape {
    std::optional<Dense::Cache> static_cache;
    std::vector<Gru::Cache> gru;
    Dense::Cache head;
    std::optional<Dense::Cache> lift;
    Index temporal_cols = 0;
    Index rows = 0;
    bool filled = false;
  };

  /// Upstream gradients; empty matrices mean "no gradient from that output".
  struct Seed {
    Matrix static_out;
    Matrix latent;
    Matrix out;
  };

  struct InputGrad {
    Matrix static_in;
    Matrix temporal_in;
  };

  static Component build(const NetSpec& spec, Rng* rng) {
    Component c;
    c.spec = spec;
    auto dense = [&](Index in, Index out, nn::Activation act) {
      return rng ? Dense::init(in, out, act, *rng) : Dense::zeros(in, out, act);
    };
    Index width = static_cast<Index>(spec.temporal_in);
    if (spec.has_static_net) {
      c.static_net = dense(static_cast<Index>(spec.static_in), static_cast<Index>(spec.static_out), nn::Activation::sigmoid);
      width += static_cast<Index>(spec.static_out);
    }
    const Index hidden = static_cast<Index>(spec.hidden);
    for (std::size_t l = 0; l < spec.n_gru_layers; ++l) {
      const auto dir = spec.bidirectional ? nn::Direction::bidirectional : nn::Direction::forward;
      const auto mode = (spec.bidirectional && l + 1 == spec.n_gru_layers) ? nn::ReturnMode::last : nn::ReturnMode::sequence;
      c.temporal.push_back(rng ? Gru::init(width, hidden, dir, mode, *rng) : Gru::zeros(width, hidden, dir, mode));
      width = c.temporal.back().output_width();
    }
    c.head = dense(width, static_cast<Index>(spec.out_cols), nn::Activation::sigmoid);
    if (spec.lift_to_hidden) c.lift = dense(static_cast<Index>(spec.out_cols), hidden, nn::Activation::none);
    return c;
  }

  Component zeros_like() const { return build(spec, nullptr); }

  /// Static path first, its output repeated on every row and appended to the
  /// temporal input, then the GRU stack and the head.
  Output forward(const Matrix& static_in, const Matrix& temporal_in, Tape* tape = nullptr) const {
    if (temporal_in.cols() != static_cast<Index>(spec.temporal_in)) {
      throw DimensionError(std::string(component_name(spec.component)) + ": temporal input has " +
                           std::to_string(temporal_in.cols()) + " columns, expected " + std::to_string(spec.temporal_in));
    }
    Output o;
    Tape local;
    Tape& tp = tape ? *tape : local;
    tp = Tape{};
    Matrix x;
    if (static_net) {
      require_shape(static_in, 1, static_cast<Index>(spec.static_in), "static input");
      tp.static_cache.emplace();
      o.static_out = static_net->forward(static_in, *tp.static_cache);
      x.resize(temporal_in.rows(), temporal_in.cols() + o.static_out.cols());
      x.leftCols(temporal_in.cols()) = temporal_in;
      x.rightCols(o.static_out.cols()) = o.static_out.replicate(temporal_in.rows(), 1);
    } else {
      x = temporal_in;
    }
    tp.gru.resize(temporal.size());
    for (std::size_t l = 0; l < temporal.size(); ++l) x = temporal[l].forward(x, tp.gru[l]);
    o.latent = x;
    o.head = head.forward(o.latent, tp.head);
    if (lift) {
      tp.lift.emplace();
      o.out = lift->forward(o.head, *tp.lift);
    } else {
      o.out = o.head;
    }
    tp.temporal_cols = temporal_in.cols();
    tp.rows = temporal_in.rows();
    tp.filled = true;
    return o;
  }

  /// Accumulates parameter gradients into `grads`; returns input gradients.
  InputGrad backward(const Tape& tp, const Seed& seed, Component& grads) const {
    if (!tp.filled) throw StateError(std::string(component_name(spec.component)) + ": backward without forward");
    Matrix d_latent;
    if (seed.out.size() > 0) {
      Matrix d_head = lift ? lift->backward(*tp.lift, seed.out, *grads.lift) : seed.out;
      d_latent = head.backward(tp.head, d_head, grads.head);
    }
    if (seed.latent.size() > 0) {
      if (d_latent.size() == 0) {
        d_latent = seed.latent;
      } else {
        d_latent += seed.latent;
      }
    }
    const Index last_rows = temporal.back().output_rows(tp.rows);
    if (d_latent.size() == 0) d_latent = Matrix::Zero(last_rows, temporal.back().output_width());

    Matrix dx = d_latent;
    for (std::size_t l = temporal.size(); l-- > 0;) dx = temporal[l].backward(tp.gru[l], dx, grads.temporal[l]);

    InputGrad g;
    g.temporal_in = dx.leftCols(tp.temporal_cols);
    if (static_net) {
      Matrix d_static = dx.rightCols(dx.cols() - tp.temporal_cols).colwise().sum();
      if (seed.static_out.size() > 0) d_static += seed.static_out;
      g.static_in = static_net->backward(*tp.static_cache, d_static, *grads.static_net);
    }
    return g;
  }

  std::vector<Matrix*> params() {
    std::vector<Matrix*> p;
    auto add = [&](std::vector<Matrix*> v) { p.insert(p.end(), v.begin(), v.end()); };
    if (static_net) add(static_net->params());
    for (auto& g : temporal) add(g.params());
    add(head.params());
    if (lift) add(lift->params());
    return p;
  }

  std::vector<const Matrix*> params() const {
    std::vector<const Matrix*> p;
    for (Matrix* m : const_cast<Component*>(this)->params()) p.push_back(m);
    return p;
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    const std::string base = component_name(spec.component);
    auto add = [&](const std::string& prefix, const std::vector<std::string>& v) {
      for (const auto& n : v) names.push_back(base + "." + prefix + "." + n);
    };
    if (static_net) add("static", Dense::param_names());
    for (std::size_t l = 0; l < temporal.size(); ++l) add("gru" + std::to_string(l), temporal[l].param_names());
    add("head", Dense::param_names());
    if (lift) add("lift", Dense::param_names());
    return names;
  }

  void set_zero() {
    for (Matrix* m : params()) m->setZero();
  }
};

inline bool bitwise_equal(const Component& a, const Component& b) {
  if (!(a.spec == b.spec)) return false;
  const auto pa = a.params();
  const auto pb = b.params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!bitwise_equal(*pa[i], *pb[i])) return false;
  }
  return true;
}

inline constexpr double kCoordClampTolerance = 1e-9;

/// Normalized coordinates must already be clamped into [0,1]^2.
inline void check_unit_coords(const Matrix& coords) {
  require_shape(coords, 1, static_cast<Index>(kCoordDims), "coordinates");
  for (Index i = 0; i < coords.size(); ++i) {
    const double v = coords.data()[i];
    if (!(v >= -kCoordClampTolerance && v <= 1.0 + kCoordClampTolerance)) {
      throw DataError("coordinates must be normalized into [0,1], got " + std::to_string(v));
    }
  }
}

/// All five components.
struct TimeGan {
  ModelShape shape;
  Component embedder, recovery, generator, supervisor, discriminator;

  static TimeGan build(const ModelShape& shape, std::uint64_t seed) {
    TimeGan m;
    m.shape = shape;
    Rng rng(seed);
    m.embedder = Component::build(make_spec(ComponentKind::Embedder, shape), &rng);
    m.recovery = Component::build(make_spec(ComponentKind::Recovery, shape), &rng);
    m.generator = Component::build(make_spec(ComponentKind::Generator, shape), &rng);
    m.supervisor = Component::build(make_spec(ComponentKind::Supervisor, shape), &rng);
    m.discriminator = Component::build(make_spec(ComponentKind::Discriminator, shape), &rng);
    return m;
  }

  std::vector<Component*> components() { return {&embedder, &recovery, &generator, &supervisor, &discriminator}; }
  std::vector<const Component*> components() const {
    return {&embedder, &recovery, &generator, &supervisor, &discriminator};
  }

  // -- inference-path helpers --------------------------------------------

  struct Embedding {
    Matrix static_latent;    // 1 x 4
    Matrix temporal_latent;  // rows x hidden
  };

  Embedding embed(const Matrix& coords, const Matrix& offsets) const {
    require_shape(offsets, static_cast<Index>(shape.rows), static_cast<Index>(shape.cols), "embed offsets");
    check_unit_coords(coords);
    auto o = embedder.forward(coords, offsets);
    return {o.static_out, o.latent};
  }

  struct Recovered {
    Matrix coords;   // 1 x 2
    Matrix offsets;  // rows x cols
  };

  Recovered recover(const Matrix& static_latent, const Matrix& temporal_latent) const {
    require_shape(temporal_latent, static_cast<Index>(shape.rows), static_cast<Index>(shape.hidden), "recover latent");
    auto o = recovery.forward(static_latent, temporal_latent);
    return {o.static_out, o.head};
  }

  Embedding generate(const Matrix& coords, const Matrix& noise) const {
    require_shape(noise, static_cast<Index>(shape.rows), static_cast<Index>(shape.cols), "generator noise");
    check_unit_coords(coords);
    auto o = generator.forward(coords, noise);
    return {o.static_out, o.latent};
  }

  /// Supervisor output: next-step latent (latent space) or next-row data.
  Matrix supervise(const Matrix& latent) const { return supervisor.forward(Matrix(), latent).out; }

  double discriminate(const Matrix& latent) const { return discriminator.forward(Matrix(), latent).head(0, 0); }

  /// Latent sequence that feeds the recovery on the synthetic path.
  Matrix synthetic_latent(const Matrix& generated_latent) const {
    return shape.supervisor_space == SupervisorSpace::latent ? supervise(generated_latent) : generated_latent;
  }

  /// coords (1x2, normalized) + noise (rows x cols) -> normalized offsets.
  Matrix synthesize(const Matrix& coords, const Matrix& noise) const {
    const auto g = generate(coords, noise);
    return recover(g.static_latent, synthetic_latent(g.temporal_latent)).offsets;
  }
};

}  // namespace surge
