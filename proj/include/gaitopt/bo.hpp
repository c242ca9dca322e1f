#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gaitopt/acquisition.hpp"
#include "gaitopt/config.hpp"
#include "gaitopt/gp.hpp"
#include "gaitopt/hyperprior.hpp"
#include "gaitopt/kernels.hpp"
#include "gaitopt/params.hpp"

namespace gaitopt {

/// Optimistic (sigma_f1) vs pessimistic (sigma_f2) prior signal amplitude.
enum class SignalVariance { Optimistic, Pessimistic };
enum class HyperMode { Fixed, Learned };

const char* signal_name(SignalVariance s);    // "sf1" / "sf2"
SignalVariance signal_from_name(const std::string& name);
const char* hyper_name(HyperMode m);          // "fixed" / "learned"
HyperMode hyper_from_name(const std::string& name);

struct BoConfig {
    KernelKind kernel = KernelKind::TwoMatern;
    AcquisitionConfig acq{};
    SignalVariance signal = SignalVariance::Optimistic;
    HyperMode hyper = HyperMode::Learned;
    int budget = 20;
    ControllerParams initial = initial_controller();
    std::uint64_t seed = 0;
    SearchBox box{};
    double mean_const = 2.0;  ///< prior mean; the scale sigma_f1/sigma_f2 bracket
    double noise_std = 0.1;
    double sigma_f1 = 1.5;    ///< optimistic amplitude, > mean_const/2
    double sigma_f2 = 0.75;   ///< pessimistic amplitude, < mean_const/2
    bool timing = false;      ///< record wall times (off: logs stay byte-stable)

    double active_signal_std() const {
        return signal == SignalVariance::Optimistic ? sigma_f1 : sigma_f2;
    }
    void validate() const;
};

KeyValueDoc bo_config_to_kv(const BoConfig& cfg);
BoConfig bo_config_from_kv(const KeyValueDoc& doc);

/// One completed iteration of the ask-tell loop.
struct RunRecord {
    int iteration = 0; ///< 1-based, contiguous
    ControllerParams proposed;
    double observed_cost = 0.0;
    Hyperparams hyperparams; ///< in effect after this iteration's refit
    ControllerParams incumbent;
    double incumbent_mean = 0.0;
    double wall_time_s = 0.0;
};

/// Ask-tell Bayesian-optimization driver. Iteration 1 proposes the
/// configured initial controller; later iterations maximize the acquisition
/// on the current posterior. tell() appends the observation, refits
/// hyperparameters in learned mode, and recomputes the incumbent
/// (posterior-mean minimum).
class BoState {
  public:
    explicit BoState(BoConfig cfg);

    /// Restore a persisted state (CLI ask/tell). The run log must be
    /// consistent with the dataset (one record per observation).
    BoState(BoConfig cfg, Dataset data, Hyperparams hp, bool awaiting_tell,
            std::optional<ControllerParams> last_proposed,
            std::vector<RunRecord> runlog);

    ControllerParams ask();
    void tell(const ControllerParams& theta, double observed_cost);

    /// Incumbent after the last tell.
    std::pair<ControllerParams, double> incumbent() const;

    const BoConfig& config() const { return cfg_; }
    const Dataset& dataset() const { return data_; }
    const Hyperparams& hyperparams() const { return hp_; }
    const std::vector<RunRecord>& runlog() const { return log_; }
    bool awaiting_tell() const { return awaiting_tell_; }
    const std::optional<ControllerParams>& last_proposed() const {
        return last_;
    }
    /// Completed iterations.
    int iteration() const { return static_cast<int>(data_.size()); }
    bool budget_exhausted() const { return iteration() >= cfg_.budget; }

  private:
    BoConfig cfg_;
    HyperPriorSet priors_;
    Hyperparams hp_;
    Dataset data_;
    std::vector<RunRecord> log_;
    bool awaiting_tell_ = false;
    std::optional<ControllerParams> last_;
};

} // namespace gaitopt
