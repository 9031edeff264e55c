#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/keyvalue.hpp"
#include "qpm/rng.hpp"
#include "qpm/trajectory.hpp"

namespace qpm {

/// State of a hybrid process: finite-domain modes plus real-valued variables.
struct HybridState {
  std::vector<int> modes;
  std::vector<double> continuous;

  friend bool operator==(const HybridState&, const HybridState&) = default;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int horizon = 1;
  int count = 1;
};

/// Discrete-time Markov process over a hybrid state space.
///
/// Trajectory layout: the continuous variables first, then each mode as a
/// real-coded trailing dimension, so STL atoms can refer to both.
class ProcessModel {
public:
  virtual ~ProcessModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n_continuous() const = 0;
  virtual std::size_t n_discrete() const = 0;
  virtual double dt() const = 0;
  virtual int horizon_default() const = 0;

  /// Draw from the distribution states are sampled from when building datasets.
  virtual HybridState sample_initial(Rng& rng) const = 0;

  /// One discrete step. Reads nothing but `s` and fresh draws from `rng`.
  virtual HybridState step(const HybridState& s, Rng& rng) const = 0;

  /// Size of each mode's domain, one entry per mode.
  virtual std::vector<int> mode_domains() const = 0;

  /// Column names of the trajectory layout.
  virtual std::vector<std::string> var_names() const = 0;

  /// Property text per monitored requirement (room i, gene i, ...).
  virtual std::vector<std::string> default_properties() const = 0;

  /// Dimension count used by the dataset-size rules (N_train = n * 1000, ...).
  virtual std::size_t size_dimension() const { return n_continuous(); }

  /// The parameters in effect, in parameter-file form.
  virtual KeyValueFile parameters() const = 0;

  std::size_t state_dim() const { return n_continuous() + n_discrete(); }
  bool valid(const HybridState& s) const;
  void check_valid(const HybridState& s) const;
  std::vector<double> flatten(const HybridState& s) const;
  HybridState unflatten(std::span<const double> flat) const;
};

/// One trajectory of `horizon + 1` states starting at s0.
Trajectory simulate_one(const ProcessModel& model, const HybridState& s0, int horizon, Rng& rng);

/// cfg.count trajectories; trajectory j uses the stream (cfg.seed, j).
std::vector<Trajectory> simulate(const ProcessModel& model, const HybridState& s0,
                                 const SimConfig& cfg);

/// `count` independent draws from the model's state distribution.
std::vector<HybridState> sample_states(const ProcessModel& model, std::size_t count,
                                       std::uint64_t seed);

// --- benchmark models ---------------------------------------------------------

/// Automated anaesthesia delivery: v' = A v + b q + w, w ~ N(0, noise_var I),
/// controller q = q_high if v1 < threshold else q_low.
class AadModel final : public ProcessModel {
public:
  struct Params {
    double a[3][3];
    double b[3];
    double noise_var;
    double q_high;
    double q_low;
    double threshold;
    double dt;
    int horizon;
    double init_lo[3];
    double init_hi[3];
  };

  static Params defaults();
  static Params from_file(const KeyValueFile& kv);

  explicit AadModel(Params p = defaults()) : p_(p) {}

  std::string name() const override { return "aad"; }
  std::size_t n_continuous() const override { return 3; }
  std::size_t n_discrete() const override { return 1; }
  double dt() const override { return p_.dt; }
  int horizon_default() const override { return p_.horizon; }
  HybridState sample_initial(Rng& rng) const override;
  HybridState step(const HybridState& s, Rng& rng) const override;
  std::vector<int> mode_domains() const override { return {2}; }
  std::vector<std::string> var_names() const override;
  std::vector<std::string> default_properties() const override;
  KeyValueFile parameters() const override;

  /// Infusion mode for concentration v1: 0 = q_high, 1 = q_low.
  int controller(double v1) const { return v1 < p_.threshold ? 0 : 1; }
  double infusion(int mode) const { return mode == 0 ? p_.q_high : p_.q_low; }
  const Params& params() const noexcept { return p_; }

private:
  Params p_;
};

/// Heated tank: two inflow pumps, one outflow valve, bang-bang level controller,
/// exponential stuck-on / stuck-off failures.
class HtModel final : public ProcessModel {
public:
  enum Unit : int { On = 0, Off = 1, StuckOn = 2, StuckOff = 3 };
  enum Controller : int { Normal = 0, Increase = 1, Decrease = 2 };
  // mode indices
  static constexpr std::size_t kPump1 = 0, kPump2 = 1, kValve = 2, kController = 3, kTank = 4;

  struct Params {
    double g;
    double t_in;
    double e_in;
    double rate_p1;
    double rate_p2;
    double rate_w;
    double h_low;
    double h_high;
    double h_dryout;
    double h_overflow;
    double t_overheat;
    double dt;
    int horizon;
    int substeps;
    double init_height[2];
    double init_temp[2];
    double init_stuck_prob;
  };

  static Params defaults();
  static Params from_file(const KeyValueFile& kv);

  explicit HtModel(Params p = defaults()) : p_(p) {}

  std::string name() const override { return "ht"; }
  std::size_t n_continuous() const override { return 2; }
  std::size_t n_discrete() const override { return 5; }
  double dt() const override { return p_.dt; }
  int horizon_default() const override { return p_.horizon; }
  HybridState sample_initial(Rng& rng) const override;
  HybridState step(const HybridState& s, Rng& rng) const override;
  std::vector<int> mode_domains() const override { return {4, 4, 4, 3, 2}; }
  std::vector<std::string> var_names() const override;
  std::vector<std::string> default_properties() const override;
  KeyValueFile parameters() const override;
  const Params& params() const noexcept { return p_; }

private:
  Params p_;
};

/// Multi-room heating with h rooms and hysteresis thermostats.
class MrhModel final : public ProcessModel {
public:
  struct Params {
    int rooms;
    double ambient;
    std::vector<double> b;       // heat loss to ambient, per room
    std::vector<double> a;       // rooms x rooms coupling, row-major
    std::vector<double> c;       // heater power, per room
    double noise_var;
    double switch_on;            // heater turns on at or below this temperature
    double switch_off;           // and off at or above this one
    std::vector<double> v_lb;
    std::vector<double> v_ub;
    double dt;
    int horizon;
    double init_lo;
    double init_hi;
  };

  static Params defaults(int rooms);
  static Params from_file(const KeyValueFile& kv, int rooms);

  explicit MrhModel(Params p);

  std::string name() const override { return "mrh" + std::to_string(p_.rooms); }
  std::size_t n_continuous() const override { return static_cast<std::size_t>(p_.rooms); }
  std::size_t n_discrete() const override { return static_cast<std::size_t>(p_.rooms); }
  double dt() const override { return p_.dt; }
  int horizon_default() const override { return p_.horizon; }
  HybridState sample_initial(Rng& rng) const override;
  HybridState step(const HybridState& s, Rng& rng) const override;
  std::vector<int> mode_domains() const override { return std::vector<int>(p_.rooms, 2); }
  std::vector<std::string> var_names() const override;
  std::vector<std::string> default_properties() const override;
  KeyValueFile parameters() const override;
  const Params& params() const noexcept { return p_; }

private:
  Params p_;
};

/// Cyclic gene repression network with h genes.
class GrnModel final : public ProcessModel {
public:
  struct Params {
    int genes;
    std::vector<double> a;  // production when off
    std::vector<double> b;  // degradation when off
    std::vector<double> c;  // production when on
    std::vector<double> d;  // degradation when on
    double k_bind;
    double k_unbind;
    std::vector<double> v_ub;
    double dt;
    int horizon;
    int substeps;
    double init_lo;
    double init_hi;
    int init_burnin;  // sampled states run a uniform 0..init_burnin steps from the box
  };

  static Params defaults(int genes);
  static Params from_file(const KeyValueFile& kv, int genes);

  explicit GrnModel(Params p);

  std::string name() const override { return "grn" + std::to_string(p_.genes); }
  std::size_t n_continuous() const override { return static_cast<std::size_t>(p_.genes); }
  std::size_t n_discrete() const override { return static_cast<std::size_t>(p_.genes); }
  double dt() const override { return p_.dt; }
  int horizon_default() const override { return p_.horizon; }
  HybridState sample_initial(Rng& rng) const override;
  HybridState step(const HybridState& s, Rng& rng) const override;
  std::vector<int> mode_domains() const override { return std::vector<int>(p_.genes, 2); }
  std::vector<std::string> var_names() const override;
  std::vector<std::string> default_properties() const override;
  KeyValueFile parameters() const override;
  const Params& params() const noexcept { return p_; }

private:
  Params p_;
};

/// Builds a model from `aad`, `ht`, `mrh<h>` or `grn<h>`. When `params` is given
/// its keys override the built-in defaults.
std::unique_ptr<ProcessModel> make_model(std::string_view spec, const KeyValueFile* params = nullptr);

}  // namespace qpm
