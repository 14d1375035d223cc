#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rrc/radar_data.hpp"

namespace rrc {

// Per-class kinematic and measurement statistics driving the generator.
struct ClassProfile {
    double extent_x = 1.0;  // m, along heading
    double extent_y = 1.0;  // m, across heading
    double speed_min = 1.0;  // m/s
    double speed_max = 2.0;
    double micro_doppler_std = 0.5;  // m/s, Doppler spread around the bulk value
    double detection_rate = 10.0;    // expected detections per 150 ms window
    double amplitude_mean = 15.0;    // dB
    double amplitude_std = 3.0;
    bool incoherent = false;  // garbage: no consistent kinematics
};

struct AugmentConfig {
    int copies = 1;            // perturbed copies per instance
    double drop_prob = 0.1;    // in [0, 1)
    double jitter_range = 0.05;    // m
    double jitter_azimuth = 0.005;  // rad
    double jitter_doppler = 0.05;   // m/s
    double jitter_amplitude = 0.5;  // dB
};

struct GeneratorConfig {
    std::uint64_t seed = 1;
    // instance counts per class id (pedestrian..other); defaults follow the
    // real-data class ratios at desk scale
    std::array<int, kNumLabels> counts = {61, 53, 5, 66, 8, 40, 22};
    std::array<ClassProfile, kNumLabels> profiles = default_profiles();
    double duration_min = 0.6;  // s
    double duration_max = 1.2;
    double ego_speed = 5.0;      // m/s, constant
    double ego_yaw_rate = 0.02;  // rad/s
    std::vector<SensorPose> sensors = {{3.5, 0.5, 0.05}};
    double fov_half_angle = M_PI / 4.0;
    double range_min = 5.0;   // m, placement band
    double range_max = 70.0;
    AugmentConfig augment;

    static std::array<ClassProfile, kNumLabels> default_profiles();
    int total_instances() const;
};

struct Scenario {
    std::vector<PolarDetection> detections;  // sorted by (t, line order)
    std::vector<std::int64_t> detection_instance;  // instance id per detection line
    std::vector<EgoState> ego;
    std::vector<TruthRecord> truth;
};

// Deterministic scenario generation: the seed fully determines all outputs,
// independent of any evaluation schedule (per-instance child seeds).
Scenario gen_scenario(const GeneratorConfig& cfg);

// Detection drop + zero-mean jitter on range/azimuth/Doppler/amplitude.
// Never empties a cluster; recomputes (x, y) from the jittered polar values
// using the detection's sensor pose. Output samples are flagged augmented.
std::vector<ClusterSample> perturb(const std::vector<ClusterSample>& samples,
                                   const AugmentConfig& aug,
                                   const std::vector<SensorPose>& sensors,
                                   std::uint64_t seed);

}  // namespace rrc
