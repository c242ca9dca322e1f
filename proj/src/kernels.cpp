#include "gaitopt/kernels.hpp"

#include <cmath>

#include "gaitopt/errors.hpp"

namespace gaitopt {

const char* kernel_name(KernelKind kind) {
    switch (kind) {
    case KernelKind::SquaredExponential: return "se";
    case KernelKind::RationalQuadratic: return "rq";
    case KernelKind::Matern32: return "m32";
    case KernelKind::Matern52: return "m52";
    case KernelKind::TwoMatern: return "2mat";
    }
    throw DomainError("unknown kernel kind");
}

KernelKind kernel_from_name(const std::string& name) {
    if (name == "se") return KernelKind::SquaredExponential;
    if (name == "rq") return KernelKind::RationalQuadratic;
    if (name == "m32") return KernelKind::Matern32;
    if (name == "m52") return KernelKind::Matern52;
    if (name == "2mat") return KernelKind::TwoMatern;
    throw DomainError("unknown kernel name: " + name);
}

static std::size_t expected_components(KernelKind kind) {
    return kind == KernelKind::TwoMatern ? 2 : 1;
}

void Hyperparams::validate() const {
    if (components.size() != expected_components(kind))
        throw DomainError("hyperparameter component count does not match kernel");
    for (const auto& c : components) {
        if (!(c.signal_std > 0.0))
            throw DomainError("signal_std must be positive");
        for (double l : c.length_scales)
            if (!(l > 0.0))
                throw DomainError("length scales must be positive");
    }
    if (kind == KernelKind::RationalQuadratic && !(rq_alpha > 0.0))
        throw DomainError("rq_alpha must be positive");
    if (!(noise_std > 0.0))
        throw DomainError("noise_std must be positive");
    if (!std::isfinite(mean_const))
        throw DomainError("mean_const must be finite");
}

double Hyperparams::total_signal_std() const {
    double var = 0.0;
    for (const auto& c : components) var += c.signal_std * c.signal_std;
    return std::sqrt(var);
}

Hyperparams default_hyperparams(KernelKind kind, double signal_std,
                                double noise_std, double mean_const) {
    Hyperparams hp;
    hp.kind = kind;
    hp.noise_std = noise_std;
    hp.mean_const = mean_const;
    if (kind == KernelKind::TwoMatern) {
        double s = signal_std / std::sqrt(2.0); // split variance evenly
        hp.components = {ComponentHyperparams{{0.25, 0.25}, s},
                         ComponentHyperparams{{0.125, 0.125}, s}};
    } else {
        hp.components = {ComponentHyperparams{{0.25, 0.25}, signal_std}};
    }
    hp.validate();
    return hp;
}

namespace {

// Scaled squared distance and the per-axis terms u_d = ((du_d)/l_d)^2.
struct Dist {
    double r2 = 0.0;
    std::array<double, 2> u{0.0, 0.0};
};

Dist scaled_dist(const ComponentHyperparams& c, const std::array<double, 2>& a,
                 const std::array<double, 2>& b) {
    Dist d;
    for (int i = 0; i < 2; ++i) {
        double t = (a[i] - b[i]) / c.length_scales[i];
        d.u[i] = t * t;
        d.r2 += d.u[i];
    }
    return d;
}

enum class Base { SE, RQ, M32, M52 };

double base_eval(Base base, const ComponentHyperparams& c, double rq_alpha,
                 const Dist& d) {
    double s2 = c.signal_std * c.signal_std;
    switch (base) {
    case Base::SE:
        return s2 * std::exp(-0.5 * d.r2);
    case Base::RQ:
        return s2 * std::pow(1.0 + d.r2 / (2.0 * rq_alpha), -rq_alpha);
    case Base::M32: {
        double cr = std::sqrt(3.0 * d.r2);
        return s2 * (1.0 + cr) * std::exp(-cr);
    }
    case Base::M52: {
        double cr = std::sqrt(5.0 * d.r2);
        return s2 * (1.0 + cr + (5.0 / 3.0) * d.r2) * std::exp(-cr);
    }
    }
    return 0.0;
}

// Gradient w.r.t. {l_wl, l_duty, sigma} (and alpha for RQ) in natural units.
void base_grad(Base base, const ComponentHyperparams& c, double rq_alpha,
               const Dist& d, double k, double* out_l, double* out_sigma,
               double* out_alpha) {
    double s2 = c.signal_std * c.signal_std;
    switch (base) {
    case Base::SE:
        for (int i = 0; i < 2; ++i)
            out_l[i] = k * d.u[i] / c.length_scales[i];
        break;
    case Base::RQ: {
        double B = 1.0 + d.r2 / (2.0 * rq_alpha);
        for (int i = 0; i < 2; ++i)
            out_l[i] = k * d.u[i] / (c.length_scales[i] * B);
        if (out_alpha)
            *out_alpha = k * (-std::log(B) + d.r2 / (2.0 * rq_alpha * B));
        break;
    }
    case Base::M32: {
        double cr = std::sqrt(3.0 * d.r2);
        double f = s2 * 3.0 * std::exp(-cr);
        for (int i = 0; i < 2; ++i)
            out_l[i] = f * d.u[i] / c.length_scales[i];
        break;
    }
    case Base::M52: {
        double cr = std::sqrt(5.0 * d.r2);
        double f = s2 * (5.0 / 3.0) * (1.0 + cr) * std::exp(-cr);
        for (int i = 0; i < 2; ++i)
            out_l[i] = f * d.u[i] / c.length_scales[i];
        break;
    }
    }
    *out_sigma = 2.0 * k / c.signal_std;
}

Base base_of(KernelKind kind) {
    switch (kind) {
    case KernelKind::SquaredExponential: return Base::SE;
    case KernelKind::RationalQuadratic: return Base::RQ;
    case KernelKind::Matern32: return Base::M32;
    case KernelKind::Matern52: return Base::M52;
    case KernelKind::TwoMatern: break;
    }
    throw DomainError("composite kernel has no single base");
}

} // namespace

double kernel_eval_nd(const Hyperparams& hp, const std::array<double, 2>& u,
                      const std::array<double, 2>& v) {
    if (hp.kind == KernelKind::TwoMatern) {
        return base_eval(Base::M52, hp.components[0], hp.rq_alpha,
                         scaled_dist(hp.components[0], u, v)) +
               base_eval(Base::M32, hp.components[1], hp.rq_alpha,
                         scaled_dist(hp.components[1], u, v));
    }
    return base_eval(base_of(hp.kind), hp.components[0], hp.rq_alpha,
                     scaled_dist(hp.components[0], u, v));
}

double kernel_eval(const Hyperparams& hp, const ControllerParams& a,
                   const ControllerParams& b, const SearchBox& box) {
    return kernel_eval_nd(hp, box.normalized(a), box.normalized(b));
}

int free_param_count(KernelKind kind) {
    switch (kind) {
    case KernelKind::RationalQuadratic: return 4;
    case KernelKind::TwoMatern: return 6;
    default: return 3;
    }
}

std::vector<std::string> free_param_names(KernelKind kind) {
    switch (kind) {
    case KernelKind::RationalQuadratic:
        return {"length_scale.wavelength", "length_scale.duty", "signal_std",
                "rq_alpha"};
    case KernelKind::TwoMatern:
        return {"length_scale.wavelength.m52", "length_scale.duty.m52",
                "signal_std.m52", "length_scale.wavelength.m32",
                "length_scale.duty.m32", "signal_std.m32"};
    default:
        return {"length_scale.wavelength", "length_scale.duty", "signal_std"};
    }
}

Eigen::VectorXd pack_free_params(const Hyperparams& hp) {
    Eigen::VectorXd v(free_param_count(hp.kind));
    int j = 0;
    for (const auto& c : hp.components) {
        v[j++] = c.length_scales[0];
        v[j++] = c.length_scales[1];
        v[j++] = c.signal_std;
    }
    if (hp.kind == KernelKind::RationalQuadratic) v[j++] = hp.rq_alpha;
    return v;
}

Hyperparams unpack_free_params(const Hyperparams& tmpl,
                               const Eigen::VectorXd& v) {
    if (v.size() != free_param_count(tmpl.kind))
        throw DomainError("free parameter vector has wrong size");
    Hyperparams hp = tmpl;
    int j = 0;
    for (auto& c : hp.components) {
        c.length_scales[0] = v[j++];
        c.length_scales[1] = v[j++];
        c.signal_std = v[j++];
    }
    if (hp.kind == KernelKind::RationalQuadratic) hp.rq_alpha = v[j++];
    hp.validate();
    return hp;
}

KernelValueGrad kernel_eval_with_grad(const Hyperparams& hp,
                                      const std::array<double, 2>& u,
                                      const std::array<double, 2>& v) {
    KernelValueGrad out;
    out.grad = Eigen::VectorXd::Zero(free_param_count(hp.kind));
    if (hp.kind == KernelKind::TwoMatern) {
        const Base bases[2] = {Base::M52, Base::M32};
        for (int ci = 0; ci < 2; ++ci) {
            const auto& c = hp.components[ci];
            Dist d = scaled_dist(c, u, v);
            double k = base_eval(bases[ci], c, hp.rq_alpha, d);
            double gl[2], gs;
            base_grad(bases[ci], c, hp.rq_alpha, d, k, gl, &gs, nullptr);
            out.value += k;
            out.grad[3 * ci + 0] = gl[0];
            out.grad[3 * ci + 1] = gl[1];
            out.grad[3 * ci + 2] = gs;
        }
        return out;
    }
    Base base = base_of(hp.kind);
    const auto& c = hp.components[0];
    Dist d = scaled_dist(c, u, v);
    out.value = base_eval(base, c, hp.rq_alpha, d);
    double gl[2], gs, ga = 0.0;
    base_grad(base, c, hp.rq_alpha, d, out.value, gl, &gs,
              hp.kind == KernelKind::RationalQuadratic ? &ga : nullptr);
    out.grad[0] = gl[0];
    out.grad[1] = gl[1];
    out.grad[2] = gs;
    if (hp.kind == KernelKind::RationalQuadratic) out.grad[3] = ga;
    return out;
}

} // namespace gaitopt
