#include "skillgp/kernels.hpp"

#include "skillgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

namespace skillgp {

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError(std::string("kernel ") + what + " must be finite and strictly positive");
    }
}

std::size_t interval_index(const std::vector<double>& boundaries, double t) {
    return static_cast<std::size_t>(
        std::upper_bound(boundaries.begin(), boundaries.end(), t) - boundaries.begin());
}

double clamp_origin(double t) { return std::max(t, 0.0); }

}  // namespace

Kernel Kernel::constant(double var) {
    require_positive(var, "variance");
    Kernel k;
    k.type_ = KernelType::Constant;
    k.var_ = var;
    return k;
}

Kernel Kernel::piecewise_constant(double var, std::vector<double> boundaries) {
    require_positive(var, "variance");
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        if (!std::isfinite(boundaries[i])) {
            throw ConfigError("piecewise_constant boundaries must be finite");
        }
        if (i > 0 && !(boundaries[i] > boundaries[i - 1])) {
            throw ConfigError("piecewise_constant boundaries must be strictly increasing");
        }
    }
    Kernel k;
    k.type_ = KernelType::PiecewiseConstant;
    k.var_ = var;
    k.boundaries_ = std::move(boundaries);
    return k;
}

Kernel Kernel::wiener(double var) {
    require_positive(var, "variance");
    Kernel k;
    k.type_ = KernelType::Wiener;
    k.var_ = var;
    return k;
}

Kernel Kernel::matern12(double var, double lscale) {
    require_positive(var, "variance");
    require_positive(lscale, "timescale");
    Kernel k;
    k.type_ = KernelType::Matern12;
    k.var_ = var;
    k.lscale_ = lscale;
    return k;
}

Kernel Kernel::matern32(double var, double lscale) {
    require_positive(var, "variance");
    require_positive(lscale, "timescale");
    Kernel k;
    k.type_ = KernelType::Matern32;
    k.var_ = var;
    k.lscale_ = lscale;
    return k;
}

Kernel Kernel::linear(double var) {
    require_positive(var, "variance");
    Kernel k;
    k.type_ = KernelType::Linear;
    k.var_ = var;
    return k;
}

Kernel Kernel::sum(std::vector<Kernel> children) {
    if (children.size() < 2) {
        throw ConfigError("sum kernel needs at least two children");
    }
    Kernel k;
    k.type_ = KernelType::Sum;
    k.children_ = std::move(children);
    return k;
}

Kernel Kernel::product(std::vector<Kernel> children) {
    if (children.size() < 2) {
        throw ConfigError("product kernel needs at least two children");
    }
    Kernel k;
    k.type_ = KernelType::Product;
    k.children_ = std::move(children);
    return k;
}

double Kernel::total_variance() const {
    switch (type_) {
        case KernelType::Sum: {
            double total = 0.0;
            for (const auto& c : children_) total += c.total_variance();
            return total;
        }
        case KernelType::Product: {
            double total = 1.0;
            for (const auto& c : children_) total *= c.total_variance();
            return total;
        }
        default:
            return var_;
    }
}

double evaluate(const Kernel& kernel, double t, double u) {
    switch (kernel.type()) {
        case KernelType::Constant:
            return kernel.var();
        case KernelType::PiecewiseConstant:
            return interval_index(kernel.boundaries(), t) == interval_index(kernel.boundaries(), u)
                       ? kernel.var()
                       : 0.0;
        case KernelType::Wiener:
            return kernel.var() * clamp_origin(std::min(t, u));
        case KernelType::Matern12:
            return kernel.var() * std::exp(-std::abs(t - u) / kernel.lscale());
        case KernelType::Matern32: {
            const double r = std::sqrt(3.0) * std::abs(t - u) / kernel.lscale();
            return kernel.var() * (1.0 + r) * std::exp(-r);
        }
        case KernelType::Linear:
            return kernel.var() * t * u;
        case KernelType::Sum: {
            double total = 0.0;
            for (const auto& c : kernel.children()) total += evaluate(c, t, u);
            return total;
        }
        case KernelType::Product: {
            double total = 1.0;
            for (const auto& c : kernel.children()) total *= evaluate(c, t, u);
            return total;
        }
    }
    return 0.0;
}

Eigen::MatrixXd gram(const Kernel& kernel, std::span<const double> times) {
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = evaluate(kernel, times[i], times[j]);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// State-space form

namespace {

int leaf_order(KernelType type) {
    switch (type) {
        case KernelType::Matern32:
        case KernelType::Linear:
            return 2;
        default:
            return 1;
    }
}

}  // namespace

StateSpaceSpec to_state_space(const Kernel& kernel, double epoch) {
    if (!std::isfinite(epoch)) {
        throw ConfigError("state-space epoch must be finite");
    }
    StateSpaceSpec spec;
    spec.epoch_ = epoch;

    std::function<void(const Kernel&)> flatten = [&](const Kernel& k) {
        if (k.type() == KernelType::Product) {
            throw ConfigError(
                "product kernels have no state-space form in this library; "
                "use additive composition");
        }
        if (k.type() == KernelType::Sum) {
            for (const auto& c : k.children()) flatten(c);
            return;
        }
        const int order = leaf_order(k.type());
        spec.blocks_.push_back({k.type(), k.var(), k.lscale(), k.boundaries(), spec.order_, order});
        spec.order_ += order;
    };
    flatten(kernel);

    if (spec.order_ > kMaxStateOrder) {
        throw ConfigError("kernel state dimension " + std::to_string(spec.order_) +
                          " exceeds the supported maximum of " + std::to_string(kMaxStateOrder));
    }
    spec.measurement_ = StateVector::Zero(spec.order_);
    for (const auto& b : spec.blocks_) spec.measurement_(b.offset) = 1.0;
    return spec;
}

void StateSpaceSpec::link(double from, double to, StateMatrix& transition,
                          StateMatrix& noise) const {
    const double t0 = from - epoch_;
    const double t1 = to - epoch_;
    const double dt = std::max(t1 - t0, 0.0);
    transition = StateMatrix::Zero(order_, order_);
    noise = StateMatrix::Zero(order_, order_);

    for (const auto& b : blocks_) {
        const int o = b.offset;
        switch (b.type) {
            case KernelType::Constant:
                transition(o, o) = 1.0;
                break;
            case KernelType::PiecewiseConstant:
                if (interval_index(b.boundaries, t0) == interval_index(b.boundaries, t1)) {
                    transition(o, o) = 1.0;
                } else {
                    noise(o, o) = b.var;
                }
                break;
            case KernelType::Wiener:
                transition(o, o) = 1.0;
                noise(o, o) = b.var * (clamp_origin(t1) - clamp_origin(t0));
                break;
            case KernelType::Matern12:
                transition(o, o) = std::exp(-dt / b.lscale);
                noise(o, o) = -b.var * std::expm1(-2.0 * dt / b.lscale);
                break;
            case KernelType::Matern32: {
                const double lam = std::sqrt(3.0) / b.lscale;
                const double e = std::exp(-lam * dt);
                Eigen::Matrix2d a;
                a << 1.0 + lam * dt, dt, -lam * lam * dt, 1.0 - lam * dt;
                a *= e;
                Eigen::Matrix2d stationary = Eigen::Matrix2d::Zero();
                stationary(0, 0) = b.var;
                stationary(1, 1) = lam * lam * b.var;
                Eigen::Matrix2d q = stationary - a * stationary * a.transpose();
                q = 0.5 * (q + q.transpose()).eval();
                transition.block<2, 2>(o, o) = a;
                noise.block<2, 2>(o, o) = q;
                break;
            }
            case KernelType::Linear:
                transition(o, o) = 1.0;
                transition(o, o + 1) = dt;
                transition(o + 1, o + 1) = 1.0;
                break;
            case KernelType::Sum:
            case KernelType::Product:
                break;
        }
    }
}

StateMatrix StateSpaceSpec::transition(double from, double to) const {
    StateMatrix a, q;
    link(from, to, a, q);
    return a;
}

StateMatrix StateSpaceSpec::noise(double from, double to) const {
    StateMatrix a, q;
    link(from, to, a, q);
    return q;
}

StateVector StateSpaceSpec::initial_mean(double /*t*/) const { return StateVector::Zero(order_); }

StateMatrix StateSpaceSpec::initial_cov(double t) const {
    const double s = t - epoch_;
    StateMatrix p = StateMatrix::Zero(order_, order_);
    for (const auto& b : blocks_) {
        const int o = b.offset;
        switch (b.type) {
            case KernelType::Constant:
            case KernelType::PiecewiseConstant:
            case KernelType::Matern12:
                p(o, o) = b.var;
                break;
            case KernelType::Wiener:
                p(o, o) = b.var * clamp_origin(s);
                break;
            case KernelType::Matern32: {
                const double lam = std::sqrt(3.0) / b.lscale;
                p(o, o) = b.var;
                p(o + 1, o + 1) = lam * lam * b.var;
                break;
            }
            case KernelType::Linear:
                p(o, o) = b.var * s * s;
                p(o, o + 1) = b.var * s;
                p(o + 1, o) = b.var * s;
                p(o + 1, o + 1) = b.var;
                break;
            case KernelType::Sum:
            case KernelType::Product:
                break;
        }
    }
    return p;
}

double StateSpaceSpec::prior_variance(double t) const {
    return measurement_.dot(initial_cov(t) * measurement_);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const char* type_name(KernelType type) {
    switch (type) {
        case KernelType::Constant: return "constant";
        case KernelType::PiecewiseConstant: return "piecewise_constant";
        case KernelType::Wiener: return "wiener";
        case KernelType::Matern12: return "matern12";
        case KernelType::Matern32: return "matern32";
        case KernelType::Linear: return "linear";
        case KernelType::Sum: return "sum";
        case KernelType::Product: return "product";
    }
    return "?";
}

double number_field(const nlohmann::json& j, const char* field, const std::string& type) {
    if (!j.contains(field)) {
        throw ConfigError("kernel '" + type + "' requires field '" + field + "'");
    }
    if (!j.at(field).is_number()) {
        throw ConfigError(std::string("kernel field '") + field + "' must be a number");
    }
    return j.at(field).get<double>();
}

}  // namespace

nlohmann::json kernel_to_json(const Kernel& kernel) {
    nlohmann::json j;
    j["type"] = type_name(kernel.type());
    switch (kernel.type()) {
        case KernelType::Sum:
        case KernelType::Product: {
            auto children = nlohmann::json::array();
            for (const auto& c : kernel.children()) children.push_back(kernel_to_json(c));
            j["children"] = children;
            break;
        }
        case KernelType::Matern12:
        case KernelType::Matern32:
            j["var"] = kernel.var();
            j["lscale"] = kernel.lscale();
            break;
        case KernelType::PiecewiseConstant:
            j["var"] = kernel.var();
            j["boundaries"] = kernel.boundaries();
            break;
        default:
            j["var"] = kernel.var();
            break;
    }
    return j;
}

Kernel kernel_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("kernel description must be a JSON object");
    }
    if (!j.contains("type") || !j.at("type").is_string()) {
        throw ConfigError("kernel requires a string field 'type'");
    }
    const auto type = j.at("type").get<std::string>();

    std::set<std::string> allowed{"type"};
    if (type == "sum" || type == "product") {
        allowed.insert("children");
    } else {
        allowed.insert("var");
        if (type == "matern12" || type == "matern32") allowed.insert("lscale");
        if (type == "piecewise_constant") allowed.insert("boundaries");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown or inapplicable field '" + key + "' in kernel '" + type + "'");
        }
    }

    if (type == "sum" || type == "product") {
        if (!j.contains("children") || !j.at("children").is_array()) {
            throw ConfigError("kernel '" + type + "' requires an array field 'children'");
        }
        std::vector<Kernel> children;
        for (const auto& c : j.at("children")) children.push_back(kernel_from_json(c));
        return type == "sum" ? Kernel::sum(std::move(children))
                             : Kernel::product(std::move(children));
    }
    const double var = number_field(j, "var", type);
    if (type == "constant") return Kernel::constant(var);
    if (type == "wiener") return Kernel::wiener(var);
    if (type == "linear") return Kernel::linear(var);
    if (type == "matern12") return Kernel::matern12(var, number_field(j, "lscale", type));
    if (type == "matern32") return Kernel::matern32(var, number_field(j, "lscale", type));
    if (type == "piecewise_constant") {
        if (!j.contains("boundaries") || !j.at("boundaries").is_array()) {
            throw ConfigError("kernel 'piecewise_constant' requires an array field 'boundaries'");
        }
        std::vector<double> boundaries;
        for (const auto& b : j.at("boundaries")) {
            if (!b.is_number()) throw ConfigError("kernel field 'boundaries' must hold numbers");
            boundaries.push_back(b.get<double>());
        }
        return Kernel::piecewise_constant(var, std::move(boundaries));
    }
    throw ConfigError("unknown kernel type '" + type + "'");
}

}  // namespace skillgp
