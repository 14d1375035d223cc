#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rrc {

// Class ids. The first six are the trained classes; `other` is the hidden
// class that never enters training.
enum class Label : int {
    pedestrian = 0,
    group = 1,
    bike = 2,
    car = 3,
    truck = 4,
    garbage = 5,
    other = 6,
};

constexpr int kNumTrainedClasses = 6;
constexpr int kNumLabels = 7;

const char* label_name(Label l);
std::optional<Label> label_from_name(std::string_view name);

struct SensorPose {
    double mount_x = 0.0;  // m, vehicle frame
    double mount_y = 0.0;  // m
    double yaw = 0.0;      // rad, in (-pi, pi]
};

struct EgoState {
    double t = 0.0;         // s
    double speed = 0.0;     // m/s, >= 0
    double yaw_rate = 0.0;  // rad/s
};

// One resolved radar point. (x, y) are vehicle-frame coordinates consistent
// with (range, azimuth) under the originating sensor pose.
struct RadarDetection {
    int sensor_id = 0;
    double t = 0.0;             // s
    double range = 0.0;         // m, >= 0
    double azimuth = 0.0;       // rad, sensor frame
    double doppler_raw = 0.0;   // m/s, radial, uncompensated
    double doppler_comp = 0.0;  // m/s, ego-compensated
    double amplitude = 0.0;     // dB
    double x = 0.0;             // m, vehicle frame
    double y = 0.0;             // m
    bool core = false;          // DBSCAN core flag
};

// All detections of one object instance inside one time window; the unit of
// feature extraction.
struct ClusterSample {
    std::int64_t instance_id = 0;
    Label label = Label::garbage;
    double window_start = 0.0;
    double window_len = 0.150;
    std::vector<RadarDetection> detections;
    int core_count = 0;
    bool augmented = false;
};

constexpr double kDefaultWindowLen = 0.150;  // s
constexpr int kMaxSequenceLen = 8;

// ---------------------------------------------------------------------------
// Coordinate transform and Doppler compensation

// Sensor polar record before the vehicle-frame transform.
struct PolarDetection {
    int sensor_id = 0;
    double t = 0.0;
    double range = 0.0;
    double azimuth = 0.0;
    double doppler_raw = 0.0;
    double amplitude = 0.0;
};

// Maps a sensor-polar detection into the vehicle frame:
//   x = mount_x + range*cos(yaw + azimuth)
//   y = mount_y + range*sin(yaw + azimuth)
// Returns nullopt (and appends a diagnostic if `diag` is non-null) for
// non-finite fields or negative range.
std::optional<RadarDetection> to_vehicle_frame(const PolarDetection& d,
                                               const SensorPose& pose,
                                               std::vector<std::string>* diag = nullptr);

// Ego velocity at the sensor mount projected onto the detection's line of
// sight; doppler_comp = doppler_raw + v_ego_radial, so stationary world
// points end up near zero.
double compensate_doppler(const RadarDetection& d, const EgoState& ego,
                          const SensorPose& pose);

// Nearest ego state in time, within `tol` seconds; nullopt = "ego gap".
std::optional<EgoState> ego_at(const std::vector<EgoState>& log, double t,
                               double tol = 0.05);

// ---------------------------------------------------------------------------
// DBSCAN over space, time, and Doppler

struct DbscanParams {
    double eps_xy = 1.2;  // m
    double eps_t = 0.2;   // s
    double eps_v = 0.8;   // m/s
    int min_pts = 3;      // includes the point itself
};

struct DbscanResult {
    static constexpr int kNoise = -1;
    std::vector<int> cluster;  // cluster id per input point, kNoise for noise
    std::vector<bool> core;
    int num_clusters = 0;
};

// Standard DBSCAN under the scaled metric
//   sqrt((dx^2+dy^2)/eps_xy^2 + dt^2/eps_t^2 + dv^2/eps_v^2) <= 1
// with dv taken on the compensated Doppler. Deterministic: clusters are
// numbered in input order of their first expanded point.
DbscanResult dbscan_cluster(const std::vector<RadarDetection>& detections,
                            const DbscanParams& params);

// ---------------------------------------------------------------------------
// Windowing

// Tiles [t_min, t_max] of one instance with stride = window_len, dropping
// empty windows. Detections must be sorted by t.
std::vector<ClusterSample> window_samples(std::int64_t instance_id, Label label,
                                          const std::vector<RadarDetection>& detections,
                                          double window_len = kDefaultWindowLen);

// ---------------------------------------------------------------------------
// Plain-text log formats (one record per line, fixed field order)

// detection log line: sensor_id t range azimuth doppler_raw amplitude
void write_detection_log(std::ostream& os, const std::vector<PolarDetection>& dets);
std::vector<PolarDetection> read_detection_log(std::istream& is,
                                               std::vector<std::string>* diag = nullptr);

// ego log line: t speed yaw_rate
void write_ego_log(std::ostream& os, const std::vector<EgoState>& states);
std::vector<EgoState> read_ego_log(std::istream& is,
                                   std::vector<std::string>* diag = nullptr);

struct TruthRecord {
    std::int64_t instance_id = 0;
    Label label = Label::garbage;
    double t_start = 0.0;
    double t_end = 0.0;
};

// ground-truth line: instance_id label t_start t_end
void write_truth_table(std::ostream& os, const std::vector<TruthRecord>& rows);
std::vector<TruthRecord> read_truth_table(std::istream& is,
                                          std::vector<std::string>* diag = nullptr);

}  // namespace rrc
