#pragma once

#include "narx/dataset.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace narx {

/// Severity-ordered track criticality classes; the numeric values are the
/// dataset class indices.
enum class Criticality : int { Normal = 1, P2 = 2, P1 = 3, P0 = 4 };

std::string to_string(Criticality c);
const std::vector<std::string>& criticality_names();

struct WheelRailState {
    double lateral_force = 0.0;
    double vertical_force = 0.0;
    double wheel_relief = 0.0;  // percent in [0,100]
    LoadState load = LoadState::Loaded;
};

/// Wheel-rail contact geometry for the flange-climb limit.
struct NadalParams {
    double contact_angle = 0.0;  // radians, in (0, pi/2)
    double friction = 0.0;       // dimensionless, >= 0
};

/// Flange-climb L/V limit (tan a - mu) / (1 + mu tan a). A non-positive
/// result means the geometry admits no safe ratio; callers should warn.
double nadal_limit(const NadalParams& params);

/// FRA-style criticality from the wheel-relief band and the L/V band for
/// the wagon load state; the final label is the more severe of the two.
///
/// Relief: Normal < 50, P2 [50,60), P1 [60,85), P0 >= 85.
/// L/V loaded: Normal <= 0.6, P1 (0.6,0.8), P0 >= 0.8 (no P2 band).
/// L/V empty: Normal <= 0.6, P2 (0.6,0.8), P1 [0.8,1.0), P0 >= 1.0.
Criticality label_criticality(double relief_percent, double lv, LoadState load);

/// Synthetic stand-in for multibody simulator output: 18 sensor-style
/// channels whose class-conditional signatures make the labels learnable,
/// with labels produced by drawing a latent (relief, L/V) pair inside the
/// target class band and running label_criticality on it.
struct SimConfig {
    int sections = 10;
    int samples_per_section = 100;
    /// Class mixture over {Normal, P2, P1, P0}; must sum to 1.
    std::array<double, 4> mixture = {0.55, 0.15, 0.15, 0.15};
    /// Channels (0-based) carrying the class signal; the rest are noise.
    std::vector<int> signal_channels = {2, 10, 11};
    /// Mean shift per severity level on signal channels.
    double signal_strength = 1.0;
    /// Scales every stochastic component; 0 gives noise-free,
    /// separable-by-construction data.
    double noise_std = 1.0;
    std::uint64_t seed = 0;
};

/// Channel names of the generated dataset (Type_load last).
const std::vector<std::string>& simulated_channel_names();

TimeSeriesDataset simulate_dataset(const SimConfig& cfg);

} // namespace narx
