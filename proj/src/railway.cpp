#include "narx/railway.hpp"
#include "narx/errors.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <random>

namespace narx {

std::string to_string(Criticality c) {
    switch (c) {
        case Criticality::Normal: return "Normal";
        case Criticality::P2: return "P2";
        case Criticality::P1: return "P1";
        case Criticality::P0: return "P0";
    }
    throw ConfigError("invalid criticality value");
}

const std::vector<std::string>& criticality_names() {
    static const std::vector<std::string> names = {"Normal", "P2", "P1", "P0"};
    return names;
}

double nadal_limit(const NadalParams& params) {
    if (!(params.contact_angle > 0.0) ||
        !(params.contact_angle < std::numbers::pi / 2.0))
        throw ConfigError("contact angle must lie in (0, pi/2)");
    if (params.friction < 0.0)
        throw ConfigError("friction coefficient must be non-negative");
    const double t = std::tan(params.contact_angle);
    return (t - params.friction) / (1.0 + params.friction * t);
}

Criticality label_criticality(double relief_percent, double lv,
                              LoadState load) {
    if (relief_percent < 0.0 || relief_percent > 100.0)
        throw DataError("wheel relief must lie in [0,100]");
    if (lv < 0.0) throw DataError("L/V ratio must be non-negative");

    Criticality by_relief = Criticality::Normal;
    if (relief_percent >= 85.0) by_relief = Criticality::P0;
    else if (relief_percent >= 60.0) by_relief = Criticality::P1;
    else if (relief_percent >= 50.0) by_relief = Criticality::P2;

    Criticality by_lv = Criticality::Normal;
    if (load == LoadState::Loaded) {
        if (lv >= 0.8) by_lv = Criticality::P0;
        else if (lv > 0.6) by_lv = Criticality::P1;
    } else {
        if (lv >= 1.0) by_lv = Criticality::P0;
        else if (lv >= 0.8) by_lv = Criticality::P1;
        else if (lv > 0.6) by_lv = Criticality::P2;
    }
    return static_cast<int>(by_relief) >= static_cast<int>(by_lv) ? by_relief
                                                                  : by_lv;
}

const std::vector<std::string>& simulated_channel_names() {
    static const std::vector<std::string> names = {
        "Acel_vert_box",     "Acel_lat_box",     "Yaw_box",
        "Pitch_box",         "Roll_box",         "Acel_vert_t_lead",
        "Acel_lat_t_lead",   "Yaw_t_lead",       "Pitch_t_lead",
        "Roll_t_lead",       "Acel_vert_t_trail","Acel_lat_t_trail",
        "Yaw_t_trail",       "Pitch_t_trail",    "Roll_t_trail",
        "Acel_long_box",     "Speed",            "Type_load"};
    return names;
}

namespace {

constexpr int kTypeLoadChannel = 17;
constexpr int kSpeedChannel = 16;

struct Latent {
    double relief;
    double lv;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// A point strictly inside the requested class band, split between the
// relief route and the L/V route where both exist.
Latent sample_latent(Criticality target, LoadState load,
                     std::mt19937_64& rng) {
    const bool lv_route = uniform(rng, 0.0, 1.0) < 0.5;
    switch (target) {
        case Criticality::Normal:
            return {uniform(rng, 0.0, 45.0), uniform(rng, 0.0, 0.55)};
        case Criticality::P2:
            if (load == LoadState::Empty && lv_route)
                return {uniform(rng, 0.0, 45.0), uniform(rng, 0.62, 0.78)};
            return {uniform(rng, 51.0, 59.0), uniform(rng, 0.0, 0.55)};
        case Criticality::P1:
            if (lv_route) {
                if (load == LoadState::Loaded)
                    return {uniform(rng, 0.0, 45.0), uniform(rng, 0.62, 0.78)};
                return {uniform(rng, 0.0, 45.0), uniform(rng, 0.82, 0.98)};
            }
            return {uniform(rng, 61.0, 84.0), uniform(rng, 0.0, 0.55)};
        case Criticality::P0:
            if (lv_route) {
                if (load == LoadState::Loaded)
                    return {uniform(rng, 0.0, 45.0), uniform(rng, 0.85, 1.3)};
                return {uniform(rng, 0.0, 45.0), uniform(rng, 1.02, 1.4)};
            }
            return {uniform(rng, 86.0, 100.0), uniform(rng, 0.0, 0.55)};
    }
    throw ConfigError("invalid criticality value");
}

} // namespace

TimeSeriesDataset simulate_dataset(const SimConfig& cfg) {
    if (cfg.sections < 1 || cfg.samples_per_section < 1)
        throw ConfigError("section and per-section sample counts must be >= 1");
    double mass = 0.0;
    for (double w : cfg.mixture) {
        if (w < 0.0) throw ConfigError("class mixture weights must be >= 0");
        mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-9)
        throw ConfigError("class mixture must sum to 1");
    if (cfg.noise_std < 0.0) throw ConfigError("noise std must be >= 0");
    const int p = static_cast<int>(simulated_channel_names().size());
    for (int ch : cfg.signal_channels)
        if (ch < 0 || ch >= p || ch == kTypeLoadChannel)
            throw ConfigError("signal channel index out of range");

    const Eigen::Index n =
        static_cast<Eigen::Index>(cfg.sections) * cfg.samples_per_section;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TimeSeriesDataset ds;
    ds.channel_names = simulated_channel_names();
    ds.class_names = criticality_names();
    ds.channels.resize(n, p);
    ds.labels.reserve(static_cast<std::size_t>(n));
    ds.load_state.reserve(static_cast<std::size_t>(n));

    for (Eigen::Index i = 0; i < n; ++i) {
        const int section = static_cast<int>(i) / cfg.samples_per_section;

        const double u = uniform(rng, 0.0, 1.0);
        int class_index = 0;
        double cum = 0.0;
        for (int v = 0; v < 4; ++v) {
            cum += cfg.mixture[static_cast<std::size_t>(v)];
            if (u < cum) { class_index = v; break; }
            class_index = v;
        }
        const auto target = static_cast<Criticality>(class_index + 1);
        const LoadState load = uniform(rng, 0.0, 1.0) < 0.5 ? LoadState::Loaded
                                                            : LoadState::Empty;
        const Latent latent = sample_latent(target, load, rng);
        assert(label_criticality(latent.relief, latent.lv, load) == target);
        (void)latent;

        const double severity = static_cast<double>(class_index);
        for (int j = 0; j < p; ++j) {
            if (j == kTypeLoadChannel) {
                ds.channels(i, j) = load == LoadState::Loaded ? 1.0 : 0.0;
                continue;
            }
            // Section-dependent baseline wander, class-independent.
            const double base =
                0.25 * std::sin(0.9 * section + 0.57 * j) * cfg.noise_std;
            double shift = 0.0;
            double spread = 1.0;
            for (std::size_t s = 0; s < cfg.signal_channels.size(); ++s) {
                if (cfg.signal_channels[s] != j) continue;
                const double weight = 1.0 / (1.0 + 0.3 * static_cast<double>(s));
                shift = cfg.signal_strength * severity * weight;
                spread = 0.6 + 0.2 * severity;
                break;
            }
            double value = base + shift + cfg.noise_std * spread * gauss(rng);
            if (j == kSpeedChannel) value += 40.0;
            ds.channels(i, j) = value;
        }
        ds.labels.push_back(class_index + 1);
        ds.load_state.push_back(load);
    }
    ds.validate();
    return ds;
}

} // namespace narx
