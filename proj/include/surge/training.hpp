#pragma once

// Three-phase training: autoencoder, then supervisor, then the joint
// adversarial phase with a thresholded discriminator schedule.

#include "surge/config.hpp"
#include "surge/nn/adam.hpp"
#include "surge/nn/loss.hpp"
#include "surge/preprocess.hpp"
#include "surge/timegan.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace surge {

struct LossRecord {
  std::string phase;
  std::size_t epoch = 0;
  std::string name;
  double value = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

using LossTrace = std::vector<LossRecord>;

inline void write_loss_csv(std::ostream& out, const LossTrace& trace) {
  csv::write_header(out, {"phase", "epoch", "loss_name", "value"});
  for (const auto& r : trace) out << r.phase << ',' << r.epoch << ',' << r.name << ',' << csv::fmt(r.value) << '\n';
}

inline std::vector<double> trace_values(const LossTrace& trace, const std::string& phase, const std::string& name) {
  std::vector<double> v;
  for (const auto& r : trace) {
    if (r.phase == phase && r.name == name) v.push_back(r.value);
  }
  return v;
}

/// Raised when a loss turns non-finite or diverges; training state is left as
/// it was before the offending update.
struct TrainingAborted : Error {
  using Error::Error;
};

inline constexpr double kDivergenceLimit = 1e6;

/// Update bookkeeping for one joint epoch.
struct ScheduleStats {
  std::size_t generator_updates = 0;
  std::size_t embedder_updates = 0;
  std::size_t disc_checks = 0;
  std::size_t disc_updates = 0;
};

class Trainer {
 public:
  Trainer(TimeGan model, TrainConfig config)
      : model_(std::move(model)),
        config_(std::move(config)),
        noise_rng_(derive_seed(config_.seed, 0x6e6f697365ULL)),
        opt_ae_e_(adam()), opt_ae_r_(adam()), opt_sup_(adam()),
        opt_joint_g_(adam()), opt_joint_s_(adam()), opt_joint_e_(adam()), opt_joint_r_(adam()), opt_joint_d_(adam()) {
    config_.validate();
  }

  const TimeGan& model() const { return model_; }
  TimeGan& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  const LossTrace& history() const { return history_; }
  const std::vector<ScheduleStats>& schedule() const { return schedule_; }
  bool autoencoder_trained() const { return ae_done_; }
  bool supervisor_trained() const { return sup_done_; }

  /// Phase 1: embedder + recovery on temporal and static reconstruction MSE.
  std::vector<double> train_autoencoder(const std::vector<OffsetSample>& samples, std::size_t epochs) {
    std::vector<double> trace;
    for (std::size_t e = 0; e < epochs; ++e) {
      double sum = 0.0;
      const auto batches = epoch_batches(samples, 1, e);
      for (const auto& b : batches) {
        Component ge = model_.embedder.zeros_like();
        Component gr = model_.recovery.zeros_like();
        const double loss = reconstruction_step(b, 0.0, ge, gr);
        guard(loss, "autoencoder reconstruction");
        apply(opt_ae_e_, model_.embedder, ge);
        apply(opt_ae_r_, model_.recovery, gr);
        sum += loss;
      }
      const double mean = sum / static_cast<double>(std::max<std::size_t>(1, batches.size()));
      trace.push_back(mean);
      history_.push_back({"autoencoder", e, "reconstruction", mean});
    }
    ae_done_ = true;
    return trace;
  }

  /// Phase 2: supervisor on one-step-ahead prediction of real embeddings
  /// (embedder frozen).
  std::vector<double> train_supervisor(const std::vector<OffsetSample>& samples, std::size_t epochs) {
    if (!ae_done_) throw StateError("supervisor training requires a trained autoencoder");
    std::vector<double> trace;
    for (std::size_t e = 0; e < epochs; ++e) {
      double sum = 0.0;
      const auto batches = epoch_batches(samples, 2, e);
      for (const auto& b : batches) {
        Component gs = model_.supervisor.zeros_like();
        const double n = static_cast<double>(b.samples.size());
        double loss = 0.0;
        for (const auto& s : b.samples) {
          const Matrix h = model_.embedder.forward(s.coords(), s.matrix).latent;
          loss += supervised_backward(h, s.matrix, 1.0 / n, gs, nullptr);
        }
        loss /= n;
        guard(loss, "supervisor");
        apply(opt_sup_, model_.supervisor, gs);
        sum += loss;
      }
      const double mean = sum / static_cast<double>(std::max<std::size_t>(1, batches.size()));
      trace.push_back(mean);
      history_.push_back({"supervisor", e, "supervised", mean});
    }
    sup_done_ = true;
    return trace;
  }

  /// Phase 3. Per batch: `gen_steps_per_disc_check` generator and embedder
  /// updates, then one discriminator check that updates only when its loss
  /// exceeds `disc_threshold`.
  LossTrace train_joint(const std::vector<OffsetSample>& samples, std::size_t epochs) {
    if (!ae_done_ || !sup_done_) {
      throw StateError("joint training requires the autoencoder and supervisor phases to complete first");
    }
    LossTrace out;
    for (std::size_t e = 0; e < epochs; ++e) {
      ScheduleStats stats;
      double g_adv = 0, g_sup = 0, g_mom = 0, e_rec = 0, d_loss = 0;
      const auto batches = epoch_batches(samples, 3, e);
      for (const auto& b : batches) {
        for (std::size_t k = 0; k < config_.gen_steps_per_disc_check; ++k) {
          const auto g = generator_step(b);
          g_adv += g.adversarial;
          g_sup += g.supervised;
          g_mom += g.moment;
          ++stats.generator_updates;

          Component ge = model_.embedder.zeros_like();
          Component gr = model_.recovery.zeros_like();
          const double rec = reconstruction_step(b, config_.lambda_embed_sup, ge, gr);
          guard(rec, "joint embedder");
          apply(opt_joint_e_, model_.embedder, ge);
          apply(opt_joint_r_, model_.recovery, gr);
          e_rec += rec;
          ++stats.embedder_updates;
        }
        const auto d = discriminator_check(b);
        d_loss += d.loss;
        ++stats.disc_checks;
        if (d.updated) ++stats.disc_updates;
      }
      const double gn = static_cast<double>(std::max<std::size_t>(1, stats.generator_updates));
      const double dn = static_cast<double>(std::max<std::size_t>(1, stats.disc_checks));
      const LossTrace rows = {
          {"joint", e, "generator_adversarial", g_adv / gn},
          {"joint", e, "generator_supervised", g_sup / gn},
          {"joint", e, "generator_moment", g_mom / gn},
          {"joint", e, "generator_total",
           (g_adv + config_.lambda_sup * g_sup + config_.lambda_moment * g_mom) / gn},
          {"joint", e, "embedder_reconstruction", e_rec / gn},
          {"joint", e, "discriminator", d_loss / dn},
          {"joint", e, "discriminator_updates", static_cast<double>(stats.disc_updates)},
      };
      out.insert(out.end(), rows.begin(), rows.end());
      history_.insert(history_.end(), rows.begin(), rows.end());
      schedule_.push_back(stats);
    }
    return out;
  }

  /// Runs all three phases with the configured epoch counts.
  void fit(const std::vector<OffsetSample>& samples) {
    train_autoencoder(samples, config_.autoencoder_epochs());
    train_supervisor(samples, config_.supervisor_epochs());
    train_joint(samples, config_.epochs);
  }

  /// Fraction of real (embedded) and generated latents the discriminator
  /// labels correctly at 0.5.
  double discriminator_accuracy(const std::vector<OffsetSample>& samples, std::uint64_t seed) const {
    if (samples.empty()) throw DataError("discriminator accuracy: no samples");
    Rng rng(seed);
    std::size_t correct = 0;
    for (const auto& s : samples) {
      const Matrix h = model_.embedder.forward(s.coords(), s.matrix).latent;
      if (model_.discriminate(h) >= 0.5) ++correct;
      const Matrix noise = uniform_matrix(rng, s.matrix.rows(), s.matrix.cols());
      const Matrix fake = model_.synthetic_latent(model_.generator.forward(s.coords(), noise).latent);
      if (model_.discriminate(fake) < 0.5) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(2 * samples.size());
  }

 private:
  struct GeneratorLosses {
    double adversarial = 0, supervised = 0, moment = 0;
  };
  struct DiscCheck {
    double loss = 0;
    bool updated = false;
  };

  nn::Adam<double> adam() const { return nn::Adam<double>(nn::AdamConfig{config_.lr, 0.9, 0.999, 1e-8}); }

  std::vector<Batch> epoch_batches(const std::vector<OffsetSample>& samples, std::uint64_t phase, std::size_t epoch) const {
    if (samples.empty()) throw DataError("training: no samples");
    return make_batches(samples, config_.batch_size, derive_seed(config_.seed, (phase << 32) + epoch));
  }

  static void apply(nn::Adam<double>& opt, Component& c, const Component& g) {
    auto gp = g.params();
    opt.step(c.params(), gp);
  }

  static void guard(double loss, const char* what) {
    if (!std::isfinite(loss)) throw TrainingAborted(std::string(what) + " loss became non-finite");
    if (loss > kDivergenceLimit) throw TrainingAborted(std::string(what) + " loss diverged (" + csv::fmt(loss) + ")");
  }

  /// Supervised one-step-ahead loss for one sample. Accumulates supervisor
  /// gradients scaled by `scale` into `gs`; when `d_latent` is given, also
  /// writes dL/d(latent) (through both the supervisor input and the target).
  double supervised_backward(const Matrix& h, const Matrix& data, double scale, Component& gs, Matrix* d_latent) const {
    Component::Tape tape;
    const auto o = model_.supervisor.forward(Matrix(), h, &tape);
    const Index rows = h.rows();
    if (rows < 2) throw DimensionError("supervisor: need at least two rows for one-step-ahead targets");
    const bool latent = model_.shape.supervisor_space == SupervisorSpace::latent;
    const Matrix target = latent ? Matrix(h.bottomRows(rows - 1)) : Matrix(data.bottomRows(rows - 1));
    const auto l = nn::mse_grad(o.out.topRows(rows - 1), target);
    Matrix seed_out = Matrix::Zero(o.out.rows(), o.out.cols());
    seed_out.topRows(rows - 1) = l.grad * scale;
    const auto g = model_.supervisor.backward(tape, {Matrix(), Matrix(), seed_out}, gs);
    if (d_latent) {
      *d_latent = g.temporal_in;
      if (latent) d_latent->bottomRows(rows - 1) -= l.grad * scale;
    }
    return l.value;
  }

  /// Reconstruction loss (temporal + static MSE) plus `sup_weight` times the
  /// supervised loss, gradients into embedder/recovery. Returns the batch mean.
  double reconstruction_step(const Batch& b, double sup_weight, Component& ge, Component& gr) const {
    const double n = static_cast<double>(b.samples.size());
    Component scratch_s = sup_weight > 0.0 ? model_.supervisor.zeros_like() : Component{};
    double total = 0.0;
    for (const auto& s : b.samples) {
      const Matrix c = s.coords();
      Component::Tape te, tr;
      const auto oe = model_.embedder.forward(c, s.matrix, &te);
      const auto orc = model_.recovery.forward(oe.static_out, oe.latent, &tr);
      const auto lt = nn::mse_grad(orc.head, s.matrix);
      const auto ls = nn::mse_grad(orc.static_out, c);
      total += lt.value + ls.value;
      const auto gin = model_.recovery.backward(tr, {ls.grad / n, Matrix(), lt.grad / n}, gr);
      Matrix d_latent = gin.temporal_in;
      if (sup_weight > 0.0) {
        Matrix d_sup;
        total += sup_weight * supervised_backward(oe.latent, s.matrix, sup_weight / n, scratch_s, &d_sup);
        d_latent += d_sup;
      }
      model_.embedder.backward(te, {gin.static_in, d_latent, Matrix()}, ge);
    }
    return total / n;
  }

  GeneratorLosses generator_step(const Batch& b) {
    const std::size_t n_samples = b.samples.size();
    const double n = static_cast<double>(n_samples);
    const bool latent_space = model_.shape.supervisor_space == SupervisorSpace::latent;

    struct Fwd {
      Component::Tape g, s, d, r;
      Component::Output og, od, orc;
    };
    std::vector<Fwd> fw(n_samples);
    std::vector<Matrix> real, fake;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const auto& smp = b.samples[i];
      const Matrix c = smp.coords();
      const Matrix noise = uniform_matrix(noise_rng_, smp.matrix.rows(), smp.matrix.cols());
      auto& f = fw[i];
      f.og = model_.generator.forward(c, noise, &f.g);
      Matrix h_hat = latent_space ? model_.supervisor.forward(Matrix(), f.og.latent, &f.s).out : f.og.latent;
      f.od = model_.discriminator.forward(Matrix(), h_hat, &f.d);
      f.orc = model_.recovery.forward(f.og.static_out, h_hat, &f.r);
      real.push_back(smp.matrix);
      fake.push_back(f.orc.head);
    }
    const auto mom = nn::moment_loss_grad(real, fake);

    Component gg = model_.generator.zeros_like();
    Component gs = model_.supervisor.zeros_like();
    Component scratch_d = model_.discriminator.zeros_like();
    Component scratch_r = model_.recovery.zeros_like();
    GeneratorLosses L;
    L.moment = mom.value;
    for (std::size_t i = 0; i < n_samples; ++i) {
      auto& f = fw[i];
      const auto adv = nn::bce_grad(f.od.head, 1.0);
      L.adversarial += adv.value / n;
      const auto gd = model_.discriminator.backward(f.d, {Matrix(), Matrix(), adv.grad / n}, scratch_d);
      const auto gr = model_.recovery.backward(f.r, {Matrix(), Matrix(), mom.grad[i] * config_.lambda_moment}, scratch_r);
      Matrix d_hhat = gd.temporal_in + gr.temporal_in;
      Matrix d_latent = latent_space ? model_.supervisor.backward(f.s, {Matrix(), Matrix(), d_hhat}, gs).temporal_in : d_hhat;
      model_.generator.backward(f.g, {gr.static_in, d_latent, Matrix()}, gg);

      // Supervised term on real embeddings trains the supervisor.
      const auto& smp = b.samples[i];
      const Matrix h = model_.embedder.forward(smp.coords(), smp.matrix).latent;
      L.supervised += supervised_backward(h, smp.matrix, config_.lambda_sup / n, gs, nullptr) / n;
    }
    guard(L.adversarial + config_.lambda_sup * L.supervised + config_.lambda_moment * L.moment, "generator");
    apply(opt_joint_g_, model_.generator, gg);
    apply(opt_joint_s_, model_.supervisor, gs);
    return L;
  }

  DiscCheck discriminator_check(const Batch& b) {
    const std::size_t n_samples = b.samples.size();
    const double n = static_cast<double>(n_samples);
    std::vector<Component::Tape> treal(n_samples), tfake(n_samples);
    std::vector<Matrix> preal(n_samples), pfake(n_samples);
    double loss = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const auto& smp = b.samples[i];
      const Matrix c = smp.coords();
      const Matrix h = model_.embedder.forward(c, smp.matrix).latent;
      preal[i] = model_.discriminator.forward(Matrix(), h, &treal[i]).head;
      const Matrix noise = uniform_matrix(noise_rng_, smp.matrix.rows(), smp.matrix.cols());
      const Matrix h_hat = model_.synthetic_latent(model_.generator.forward(c, noise).latent);
      pfake[i] = model_.discriminator.forward(Matrix(), h_hat, &tfake[i]).head;
      loss += (nn::bce_grad(preal[i], 1.0).value + nn::bce_grad(pfake[i], 0.0).value) / n;
    }
    guard(loss, "discriminator");
    DiscCheck res{loss, false};
    if (loss > config_.disc_threshold) {
      Component gd = model_.discriminator.zeros_like();
      for (std::size_t i = 0; i < n_samples; ++i) {
        model_.discriminator.backward(treal[i], {Matrix(), Matrix(), nn::bce_grad(preal[i], 1.0).grad / n}, gd);
        model_.discriminator.backward(tfake[i], {Matrix(), Matrix(), nn::bce_grad(pfake[i], 0.0).grad / n}, gd);
      }
      apply(opt_joint_d_, model_.discriminator, gd);
      res.updated = true;
    }
    return res;
  }

  TimeGan model_;
  TrainConfig config_;
  Rng noise_rng_;
  nn::Adam<double> opt_ae_e_, opt_ae_r_, opt_sup_;
  nn::Adam<double> opt_joint_g_, opt_joint_s_, opt_joint_e_, opt_joint_r_, opt_joint_d_;
  LossTrace history_;
  std::vector<ScheduleStats> schedule_;
  bool ae_done_ = false;
  bool sup_done_ = false;
};

}  // namespace surge
