#include "rrc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rrc/rng.hpp"

namespace rrc {

namespace {

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

// "Other" road users are drawn from held-out profiles that overlap the
// trained classes: wheelchair-like (pedestrian extent, rigid-body Doppler)
// and scooter-like (bike extent, pedestrian-like micro-Doppler).
ClassProfile other_profile(int variant) {
    ClassProfile p;
    if (variant == 0) {
        p.extent_x = 0.5;
        p.extent_y = 0.5;
        p.speed_min = 1.0;
        p.speed_max = 2.5;
        p.micro_doppler_std = 0.3;
        p.detection_rate = 8.0;
        p.amplitude_mean = 10.0;
        p.amplitude_std = 3.0;
    } else {
        p.extent_x = 1.8;
        p.extent_y = 0.6;
        p.speed_min = 3.0;
        p.speed_max = 6.0;
        p.micro_doppler_std = 1.2;
        p.detection_rate = 8.0;
        p.amplitude_mean = 12.0;
        p.amplitude_std = 3.0;
    }
    return p;
}

struct TaggedDetection {
    PolarDetection det;
    std::int64_t instance;
    std::int64_t seq;  // generation order, stable tie-break
};

}  // namespace

std::array<ClassProfile, kNumLabels> GeneratorConfig::default_profiles() {
    std::array<ClassProfile, kNumLabels> p{};
    p[0] = {0.5, 0.5, 1.0, 2.0, 1.2, 8.0, 10.0, 3.0, false};   // pedestrian
    p[1] = {2.5, 2.0, 1.0, 2.0, 1.4, 20.0, 12.0, 3.0, false};  // group
    p[2] = {1.8, 0.6, 3.0, 7.0, 1.0, 8.0, 12.0, 3.0, false};   // bike
    p[3] = {4.5, 1.8, 5.0, 15.0, 0.25, 18.0, 20.0, 4.0, false};  // car
    p[4] = {10.0, 2.5, 4.0, 12.0, 0.3, 30.0, 28.0, 5.0, false};  // truck
    p[5] = {2.0, 2.0, 0.0, 0.0, 0.5, 8.0, 5.0, 6.0, true};       // garbage
    p[6] = other_profile(0);                                     // other (variants in gen)
    return p;
}

int GeneratorConfig::total_instances() const {
    return std::accumulate(counts.begin(), counts.end(), 0);
}

Scenario gen_scenario(const GeneratorConfig& cfg) {
    if (cfg.total_instances() <= 0)
        throw std::invalid_argument("gen_scenario: zero total instances");
    if (cfg.sensors.empty())
        throw std::invalid_argument("gen_scenario: no sensors configured");
    for (int c = 0; c < kNumLabels; ++c) {
        if (cfg.counts[c] < 0)
            throw std::invalid_argument("gen_scenario: negative instance count");
    }

    const double scene_span = 30.0;  // s, instance start times spread over this
    std::vector<TaggedDetection> all;
    Scenario out;

    std::int64_t instance_id = 0;
    std::int64_t seq = 0;
    for (int c = 0; c < kNumLabels; ++c) {
        for (int k = 0; k < cfg.counts[c]; ++k) {
            ++instance_id;
            const Label label = static_cast<Label>(c);
            ClassProfile prof = cfg.profiles[c];
            if (label == Label::other) prof = other_profile(k % 2);

            Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(instance_id)));
            const double t0 = rng.uniform(0.0, scene_span);
            const double dur = rng.uniform(cfg.duration_min, cfg.duration_max);
            const double speed = rng.uniform(prof.speed_min, prof.speed_max);
            const double heading = rng.uniform(0.0, 2.0 * M_PI);

            // placement relative to the first sensor, inside its field of view
            const SensorPose& s0 = cfg.sensors.front();
            const double place_r = rng.uniform(cfg.range_min, cfg.range_max);
            const double place_az = rng.uniform(-cfg.fov_half_angle + 0.06,
                                                cfg.fov_half_angle - 0.06);
            double cx = s0.mount_x + place_r * std::cos(s0.yaw + place_az);
            double cy = s0.mount_y + place_r * std::sin(s0.yaw + place_az);
            const double vox = prof.incoherent ? 0.0 : speed * std::cos(heading);
            const double voy = prof.incoherent ? 0.0 : speed * std::sin(heading);

            TruthRecord tr;
            tr.instance_id = instance_id;
            tr.label = label;
            tr.t_start = t0;
            tr.t_end = t0 + dur;
            out.truth.push_back(tr);

            // garbage bulk Doppler: arbitrary, unrelated to any motion
            const double garbage_doppler = rng.uniform(-3.0, 3.0);

            const int num_windows =
                std::max(1, static_cast<int>(std::ceil(dur / kDefaultWindowLen)));
            for (int w = 0; w < num_windows; ++w) {
                const double ws = t0 + w * kDefaultWindowLen;
                const double we = std::min(ws + kDefaultWindowLen, t0 + dur);
                if (we <= ws) break;
                if (prof.incoherent) {
                    // spatio-temporally incoherent: the blob jumps around
                    cx += rng.gaussian(0.0, 0.3);
                    cy += rng.gaussian(0.0, 0.3);
                }
                const int count = std::max(1, rng.poisson(prof.detection_rate));
                for (int di = 0; di < count; ++di) {
                    const double t = rng.uniform(ws, we);
                    const double ox = rng.uniform(-0.5, 0.5) * prof.extent_x;
                    const double oy = rng.uniform(-0.5, 0.5) * prof.extent_y;
                    // object extent oriented along the heading
                    const double px = cx + vox * (t - t0) + ox * std::cos(heading) -
                                      oy * std::sin(heading);
                    const double py = cy + voy * (t - t0) + ox * std::sin(heading) +
                                      oy * std::cos(heading);

                    // first sensor that sees the point
                    int sensor_id = -1;
                    double rng_m = 0.0, az = 0.0;
                    for (std::size_t si = 0; si < cfg.sensors.size(); ++si) {
                        const SensorPose& sp = cfg.sensors[si];
                        const double dx = px - sp.mount_x, dy = py - sp.mount_y;
                        const double r = std::hypot(dx, dy);
                        const double a = wrap_angle(std::atan2(dy, dx) - sp.yaw);
                        if (r > 0.1 && std::abs(a) <= cfg.fov_half_angle) {
                            sensor_id = static_cast<int>(si);
                            rng_m = r;
                            az = a;
                            break;
                        }
                    }
                    if (sensor_id < 0) continue;  // outside every field of view

                    const SensorPose& sp = cfg.sensors[sensor_id];
                    const double losx = (px - sp.mount_x) / rng_m;
                    const double losy = (py - sp.mount_y) / rng_m;
                    double v_comp;
                    if (prof.incoherent) {
                        v_comp = garbage_doppler + rng.gaussian(0.0, prof.micro_doppler_std);
                    } else {
                        v_comp = vox * losx + voy * losy +
                                 rng.gaussian(0.0, prof.micro_doppler_std);
                    }
                    const double mvx = cfg.ego_speed - cfg.ego_yaw_rate * sp.mount_y;
                    const double mvy = cfg.ego_yaw_rate * sp.mount_x;
                    const double v_ego_radial = mvx * losx + mvy * losy;

                    TaggedDetection td;
                    td.det.sensor_id = sensor_id;
                    td.det.t = t;
                    td.det.range = rng_m;
                    td.det.azimuth = az;
                    td.det.doppler_raw = v_comp - v_ego_radial;
                    td.det.amplitude = rng.gaussian(prof.amplitude_mean, prof.amplitude_std);
                    td.instance = instance_id;
                    td.seq = seq++;
                    all.push_back(td);
                }
            }
        }
    }

    std::sort(all.begin(), all.end(), [](const TaggedDetection& a, const TaggedDetection& b) {
        if (a.det.t != b.det.t) return a.det.t < b.det.t;
        return a.seq < b.seq;
    });
    out.detections.reserve(all.size());
    out.detection_instance.reserve(all.size());
    for (const auto& td : all) {
        out.detections.push_back(td.det);
        out.detection_instance.push_back(td.instance);
    }

    double t_max = scene_span + cfg.duration_max;
    if (!all.empty()) t_max = std::max(t_max, all.back().det.t);
    for (double t = 0.0; t <= t_max + 0.02; t += 0.02) {
        out.ego.push_back({t, cfg.ego_speed, cfg.ego_yaw_rate});
    }
    return out;
}

std::vector<ClusterSample> perturb(const std::vector<ClusterSample>& samples,
                                   const AugmentConfig& aug,
                                   const std::vector<SensorPose>& sensors,
                                   std::uint64_t seed) {
    if (aug.drop_prob < 0.0 || aug.drop_prob >= 1.0)
        throw std::invalid_argument("perturb: drop_prob must be in [0, 1)");
    std::vector<ClusterSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        // keyed by (instance, window) so the result is independent of the
        // position of the sample in the input list
        const auto wkey = static_cast<std::uint64_t>(
            static_cast<std::int64_t>(std::llround(s.window_start * 1e6)));
        Rng rng(Rng::mix(Rng::mix(seed, static_cast<std::uint64_t>(s.instance_id)), wkey));

        ClusterSample p = s;
        p.augmented = true;
        p.detections.clear();
        p.core_count = 0;
        for (const auto& d : s.detections) {
            if (rng.uniform() < aug.drop_prob) continue;
            RadarDetection j = d;
            j.range = std::max(0.0, j.range + rng.gaussian(0.0, aug.jitter_range));
            j.azimuth += rng.gaussian(0.0, aug.jitter_azimuth);
            const double dv = rng.gaussian(0.0, aug.jitter_doppler);
            j.doppler_raw += dv;
            j.doppler_comp += dv;
            j.amplitude += rng.gaussian(0.0, aug.jitter_amplitude);
            const SensorPose pose = (j.sensor_id >= 0 &&
                                     j.sensor_id < static_cast<int>(sensors.size()))
                                        ? sensors[j.sensor_id]
                                        : SensorPose{};
            j.x = pose.mount_x + j.range * std::cos(pose.yaw + j.azimuth);
            j.y = pose.mount_y + j.range * std::sin(pose.yaw + j.azimuth);
            if (j.core) ++p.core_count;
            p.detections.push_back(j);
        }
        if (p.detections.empty()) {  // never empty a cluster
            p.detections.push_back(s.detections.front());
            if (s.detections.front().core) p.core_count = 1;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace rrc
