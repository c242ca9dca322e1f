#include "gaitopt/bo.hpp"

#include <chrono>
#include <cmath>

#include "gaitopt/errors.hpp"
#include "gaitopt/map_fit.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

const char* signal_name(SignalVariance s) {
    return s == SignalVariance::Optimistic ? "sf1" : "sf2";
}

SignalVariance signal_from_name(const std::string& name) {
    if (name == "sf1") return SignalVariance::Optimistic;
    if (name == "sf2") return SignalVariance::Pessimistic;
    throw DomainError("unknown signal-variance setting: " + name);
}

const char* hyper_name(HyperMode m) {
    return m == HyperMode::Fixed ? "fixed" : "learned";
}

HyperMode hyper_from_name(const std::string& name) {
    if (name == "fixed") return HyperMode::Fixed;
    if (name == "learned") return HyperMode::Learned;
    throw DomainError("unknown hyperparameter mode: " + name);
}

void BoConfig::validate() const {
    acq.validate();
    box.validate();
    if (budget < 1) throw DomainError("budget must be >= 1");
    if (!box.contains(initial))
        throw DomainError("initial controller outside the search box");
    if (!(sigma_f1 > mean_const / 2.0))
        throw DomainError("sigma_f1 must exceed mean_const/2 (optimistic)");
    if (!(sigma_f2 < mean_const / 2.0) || !(sigma_f2 > 0.0))
        throw DomainError("sigma_f2 must be in (0, mean_const/2) (pessimistic)");
    if (!(noise_std > 0.0)) throw DomainError("noise_std must be positive");
    if (acq.kind == AcquisitionKind::EntropySearch &&
        hyper == HyperMode::Learned)
        throw DomainError(
            "entropy search with learned hyperparameters is unsupported");
}

KeyValueDoc bo_config_to_kv(const BoConfig& cfg) {
    cfg.validate();
    KeyValueDoc doc;
    doc.set("kernel", kernel_name(cfg.kernel));
    doc.set("acq.kind", acquisition_name(cfg.acq.kind));
    doc.set_double("acq.gamma", cfg.acq.gamma);
    doc.set_int("acq.es.representers", cfg.acq.es_representer_count);
    doc.set_int("acq.es.mc_samples", cfg.acq.es_mc_samples);
    doc.set("signal", signal_name(cfg.signal));
    doc.set("hyper", hyper_name(cfg.hyper));
    doc.set_int("budget", cfg.budget);
    doc.set_u64("seed", cfg.seed);
    doc.set_double("initial.wavelength_um", cfg.initial.wavelength_um);
    doc.set_double("initial.duty_pct", cfg.initial.duty_cycle_pct);
    doc.set_double("box.wavelength_min_um", cfg.box.wavelength_min_um);
    doc.set_double("box.wavelength_max_um", cfg.box.wavelength_max_um);
    doc.set_double("box.duty_min_pct", cfg.box.duty_min_pct);
    doc.set_double("box.duty_max_pct", cfg.box.duty_max_pct);
    doc.set_double("mean_const", cfg.mean_const);
    doc.set_double("noise_std", cfg.noise_std);
    doc.set_double("sigma_f1", cfg.sigma_f1);
    doc.set_double("sigma_f2", cfg.sigma_f2);
    doc.set_bool("timing", cfg.timing);
    return doc;
}

BoConfig bo_config_from_kv(const KeyValueDoc& doc) {
    BoConfig cfg;
    cfg.kernel = kernel_from_name(doc.get_or("kernel", "2mat"));
    cfg.acq.kind = acquisition_from_name(doc.get_or("acq.kind", "ei"));
    cfg.acq.gamma = doc.get_double_or("acq.gamma", cfg.acq.gamma);
    cfg.acq.es_representer_count =
        doc.get_int_or("acq.es.representers", cfg.acq.es_representer_count);
    cfg.acq.es_mc_samples =
        doc.get_int_or("acq.es.mc_samples", cfg.acq.es_mc_samples);
    cfg.signal = signal_from_name(doc.get_or("signal", "sf1"));
    cfg.hyper = hyper_from_name(doc.get_or("hyper", "learned"));
    cfg.budget = doc.get_int_or("budget", cfg.budget);
    cfg.seed = doc.get_u64_or("seed", cfg.seed);
    cfg.initial.wavelength_um =
        doc.get_double_or("initial.wavelength_um", cfg.initial.wavelength_um);
    cfg.initial.duty_cycle_pct =
        doc.get_double_or("initial.duty_pct", cfg.initial.duty_cycle_pct);
    cfg.box.wavelength_min_um =
        doc.get_double_or("box.wavelength_min_um", cfg.box.wavelength_min_um);
    cfg.box.wavelength_max_um =
        doc.get_double_or("box.wavelength_max_um", cfg.box.wavelength_max_um);
    cfg.box.duty_min_pct =
        doc.get_double_or("box.duty_min_pct", cfg.box.duty_min_pct);
    cfg.box.duty_max_pct =
        doc.get_double_or("box.duty_max_pct", cfg.box.duty_max_pct);
    cfg.mean_const = doc.get_double_or("mean_const", cfg.mean_const);
    cfg.noise_std = doc.get_double_or("noise_std", cfg.noise_std);
    cfg.sigma_f1 = doc.get_double_or("sigma_f1", cfg.sigma_f1);
    cfg.sigma_f2 = doc.get_double_or("sigma_f2", cfg.sigma_f2);
    cfg.timing = doc.get_bool_or("timing", cfg.timing);
    cfg.validate();
    return cfg;
}

namespace {

Hyperparams initial_hyperparams(const BoConfig& cfg) {
    return default_hyperparams(cfg.kernel, cfg.active_signal_std(),
                               cfg.noise_std, cfg.mean_const);
}

} // namespace

BoState::BoState(BoConfig cfg)
    : cfg_(std::move(cfg)),
      priors_(HyperPriorSet::defaults(cfg_.kernel, cfg_.active_signal_std())),
      hp_(initial_hyperparams(cfg_)) {
    cfg_.validate();
}

BoState::BoState(BoConfig cfg, Dataset data, Hyperparams hp,
                 bool awaiting_tell,
                 std::optional<ControllerParams> last_proposed,
                 std::vector<RunRecord> runlog)
    : cfg_(std::move(cfg)),
      priors_(HyperPriorSet::defaults(cfg_.kernel, cfg_.active_signal_std())),
      hp_(std::move(hp)), data_(std::move(data)), log_(std::move(runlog)),
      awaiting_tell_(awaiting_tell), last_(last_proposed) {
    cfg_.validate();
    hp_.validate();
    if (hp_.kind != cfg_.kernel)
        throw StateError("hyperparameter kernel does not match config");
    if (log_.size() != data_.size())
        throw StateError("run log and dataset are inconsistent");
    if (awaiting_tell_ && !last_)
        throw StateError("awaiting a tell but no proposal recorded");
    for (const auto& obs : data_.points)
        if (!cfg_.box.contains(obs.params))
            throw StateError("stored observation outside the search box");
    for (std::size_t i = 0; i < log_.size(); ++i)
        if (log_[i].iteration != static_cast<int>(i) + 1)
            throw StateError("run log iterations not contiguous");
}

ControllerParams BoState::ask() {
    if (awaiting_tell_)
        throw ProtocolError("ask called again before tell");
    if (budget_exhausted())
        throw BudgetError("evaluation budget exhausted");
    const int iter = iteration() + 1;
    ControllerParams proposal;
    if (iter == 1) {
        proposal = cfg_.initial;
    } else {
        Posterior post(hp_, cfg_.box, data_);
        Incumbent inc{log_.back().incumbent, log_.back().incumbent_mean};
        proposal = maximize_acq(
            post, cfg_.acq,
            derive_seed(cfg_.seed, streams::kEntropySearch,
                        static_cast<std::uint64_t>(iter)),
            &inc);
    }
    awaiting_tell_ = true;
    last_ = proposal;
    return proposal;
}

void BoState::tell(const ControllerParams& theta, double observed_cost) {
    if (!awaiting_tell_)
        throw ProtocolError("tell without a pending ask");
    if (std::fabs(theta.wavelength_um - last_->wavelength_um) > 1e-6 ||
        std::fabs(theta.duty_cycle_pct - last_->duty_cycle_pct) > 1e-6)
        throw ProtocolError("tell does not match the last proposal");
    if (!std::isfinite(observed_cost))
        throw DomainError("observed cost must be finite");

    const auto t0 = std::chrono::steady_clock::now();
    data_.add(*last_, observed_cost);
    const int iter = iteration();
    if (cfg_.hyper == HyperMode::Learned) {
        MapFitOptions opt;
        opt.seed = derive_seed(cfg_.seed, streams::kMapFit,
                               static_cast<std::uint64_t>(iter));
        hp_ = map_fit(hp_, priors_, cfg_.box, data_, opt).hp;
    }
    Posterior post(hp_, cfg_.box, data_);
    Incumbent inc = find_incumbent(post);
    double wall = 0.0;
    if (cfg_.timing) {
        wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
                   .count();
    }
    log_.push_back({iter, *last_, observed_cost, hp_, inc.theta_star,
                    inc.mu_star, wall});
    awaiting_tell_ = false;
    last_.reset();
}

std::pair<ControllerParams, double> BoState::incumbent() const {
    if (log_.empty())
        throw StateError("no observations yet; incumbent undefined");
    return {log_.back().incumbent, log_.back().incumbent_mean};
}

} // namespace gaitopt
