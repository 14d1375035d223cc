#include "rrc/radar_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rrc {

namespace {

const char* kLabelNames[kNumLabels] = {"pedestrian", "group",   "bike", "car",
                                       "truck",      "garbage", "other"};

void fmt_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

const char* label_name(Label l) { return kLabelNames[static_cast<int>(l)]; }

std::optional<Label> label_from_name(std::string_view name) {
    for (int i = 0; i < kNumLabels; ++i) {
        if (name == kLabelNames[i]) return static_cast<Label>(i);
    }
    return std::nullopt;
}

std::optional<RadarDetection> to_vehicle_frame(const PolarDetection& d,
                                               const SensorPose& pose,
                                               std::vector<std::string>* diag) {
    const bool finite = std::isfinite(d.t) && std::isfinite(d.range) &&
                        std::isfinite(d.azimuth) && std::isfinite(d.doppler_raw) &&
                        std::isfinite(d.amplitude);
    if (!finite || d.range < 0.0) {
        if (diag) {
            std::ostringstream msg;
            msg << "rejected detection at t=" << d.t << " sensor=" << d.sensor_id
                << (finite ? ": negative range" : ": non-finite field");
            diag->push_back(msg.str());
        }
        return std::nullopt;
    }
    RadarDetection out;
    out.sensor_id = d.sensor_id;
    out.t = d.t;
    out.range = d.range;
    out.azimuth = d.azimuth;
    out.doppler_raw = d.doppler_raw;
    out.doppler_comp = d.doppler_raw;  // until compensation runs
    out.amplitude = d.amplitude;
    out.x = pose.mount_x + d.range * std::cos(pose.yaw + d.azimuth);
    out.y = pose.mount_y + d.range * std::sin(pose.yaw + d.azimuth);
    return out;
}

double compensate_doppler(const RadarDetection& d, const EgoState& ego,
                          const SensorPose& pose) {
    // Rigid-body ego velocity at the sensor mount: translation along the
    // vehicle x axis plus the yaw-rate-induced component.
    const double vx = ego.speed - ego.yaw_rate * pose.mount_y;
    const double vy = ego.yaw_rate * pose.mount_x;
    const double los = pose.yaw + d.azimuth;  // line of sight, vehicle frame
    const double v_ego_radial = vx * std::cos(los) + vy * std::sin(los);
    return d.doppler_raw + v_ego_radial;
}

std::optional<EgoState> ego_at(const std::vector<EgoState>& log, double t, double tol) {
    const EgoState* best = nullptr;
    double best_dt = tol;
    for (const auto& e : log) {
        const double dt = std::abs(e.t - t);
        if (dt <= best_dt) {
            best_dt = dt;
            best = &e;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

// ---------------------------------------------------------------------------

DbscanResult dbscan_cluster(const std::vector<RadarDetection>& detections,
                            const DbscanParams& params) {
    const int n = static_cast<int>(detections.size());
    DbscanResult res;
    res.cluster.assign(n, DbscanResult::kNoise);
    res.core.assign(n, false);
    if (n == 0) return res;

    // Neighbor candidates are limited to |dt| <= eps_t via a t-sorted index.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (detections[a].t != detections[b].t) return detections[a].t < detections[b].t;
        return a < b;
    });
    std::vector<int> pos(n);  // position of point i in `order`
    for (int k = 0; k < n; ++k) pos[order[k]] = k;

    const double exy2 = params.eps_xy * params.eps_xy;
    const double et2 = params.eps_t * params.eps_t;
    const double ev2 = params.eps_v * params.eps_v;

    auto neighbors = [&](int i, std::vector<int>& out) {
        out.clear();
        const auto& a = detections[i];
        // scan left and right of i in time order
        for (int k = pos[i]; k >= 0; --k) {
            const int j = order[k];
            if (a.t - detections[j].t > params.eps_t) break;
            out.push_back(j);
        }
        for (int k = pos[i] + 1; k < n; ++k) {
            const int j = order[k];
            if (detections[j].t - a.t > params.eps_t) break;
            out.push_back(j);
        }
        // filter by the full scaled metric
        std::size_t w = 0;
        for (int j : out) {
            const auto& b = detections[j];
            const double dx = a.x - b.x, dy = a.y - b.y;
            const double dt = a.t - b.t;
            const double dv = a.doppler_comp - b.doppler_comp;
            const double d2 = (dx * dx + dy * dy) / exy2 + dt * dt / et2 + dv * dv / ev2;
            if (d2 <= 1.0) out[w++] = j;
        }
        out.resize(w);
        std::sort(out.begin(), out.end());
    };

    std::vector<int> nb, nb2;
    std::vector<bool> visited(n, false);
    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = true;
        neighbors(i, nb);
        if (static_cast<int>(nb.size()) < params.min_pts) continue;  // noise or border
        const int cid = next_cluster++;
        res.cluster[i] = cid;
        res.core[i] = true;
        std::deque<int> frontier(nb.begin(), nb.end());
        while (!frontier.empty()) {
            const int j = frontier.front();
            frontier.pop_front();
            if (res.cluster[j] == DbscanResult::kNoise) res.cluster[j] = cid;
            if (visited[j]) continue;
            visited[j] = true;
            res.cluster[j] = cid;
            neighbors(j, nb2);
            if (static_cast<int>(nb2.size()) >= params.min_pts) {
                res.core[j] = true;
                for (int q : nb2) frontier.push_back(q);
            }
        }
    }
    res.num_clusters = next_cluster;
    return res;
}

// ---------------------------------------------------------------------------

std::vector<ClusterSample> window_samples(std::int64_t instance_id, Label label,
                                          const std::vector<RadarDetection>& detections,
                                          double window_len) {
    std::vector<ClusterSample> out;
    if (detections.empty()) return out;
    for (std::size_t i = 1; i < detections.size(); ++i) {
        if (detections[i].t < detections[i - 1].t)
            throw std::invalid_argument("window_samples: detections not sorted by t");
    }
    const double t0 = detections.front().t;
    const double t1 = detections.back().t;
    const int num_windows = static_cast<int>(std::floor((t1 - t0) / window_len)) + 1;
    std::size_t idx = 0;
    for (int w = 0; w < num_windows; ++w) {
        const double ws = t0 + w * window_len;
        const double we = ws + window_len;
        ClusterSample s;
        s.instance_id = instance_id;
        s.label = label;
        s.window_start = ws;
        s.window_len = window_len;
        while (idx < detections.size() && detections[idx].t < we) {
            s.detections.push_back(detections[idx]);
            if (detections[idx].core) ++s.core_count;
            ++idx;
        }
        if (!s.detections.empty()) out.push_back(std::move(s));
    }
    // the last detection sits exactly at t1; floor arithmetic keeps it inside
    // the final window, so every point lands in exactly one sample
    return out;
}

// ---------------------------------------------------------------------------
// Log IO

void write_detection_log(std::ostream& os, const std::vector<PolarDetection>& dets) {
    std::string line;
    for (const auto& d : dets) {
        line.clear();
        line += std::to_string(d.sensor_id);
        line += ' ';
        fmt_double(line, d.t);
        line += ' ';
        fmt_double(line, d.range);
        line += ' ';
        fmt_double(line, d.azimuth);
        line += ' ';
        fmt_double(line, d.doppler_raw);
        line += ' ';
        fmt_double(line, d.amplitude);
        line += '\n';
        os << line;
    }
}

std::vector<PolarDetection> read_detection_log(std::istream& is,
                                               std::vector<std::string>* diag) {
    std::vector<PolarDetection> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        PolarDetection d;
        std::istringstream ss(line);
        if (ss >> d.sensor_id >> d.t >> d.range >> d.azimuth >> d.doppler_raw >>
            d.amplitude) {
            out.push_back(d);
        } else if (diag) {
            diag->push_back("detection log line " + std::to_string(lineno) +
                            ": parse error");
        }
    }
    return out;
}

void write_ego_log(std::ostream& os, const std::vector<EgoState>& states) {
    std::string line;
    for (const auto& e : states) {
        line.clear();
        fmt_double(line, e.t);
        line += ' ';
        fmt_double(line, e.speed);
        line += ' ';
        fmt_double(line, e.yaw_rate);
        line += '\n';
        os << line;
    }
}

std::vector<EgoState> read_ego_log(std::istream& is, std::vector<std::string>* diag) {
    std::vector<EgoState> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        EgoState e;
        std::istringstream ss(line);
        if (ss >> e.t >> e.speed >> e.yaw_rate) {
            out.push_back(e);
        } else if (diag) {
            diag->push_back("ego log line " + std::to_string(lineno) + ": parse error");
        }
    }
    return out;
}

void write_truth_table(std::ostream& os, const std::vector<TruthRecord>& rows) {
    std::string line;
    for (const auto& r : rows) {
        line.clear();
        line += std::to_string(r.instance_id);
        line += ' ';
        line += label_name(r.label);
        line += ' ';
        fmt_double(line, r.t_start);
        line += ' ';
        fmt_double(line, r.t_end);
        line += '\n';
        os << line;
    }
}

std::vector<TruthRecord> read_truth_table(std::istream& is,
                                          std::vector<std::string>* diag) {
    std::vector<TruthRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        TruthRecord r;
        std::string name;
        std::istringstream ss(line);
        if (ss >> r.instance_id >> name >> r.t_start >> r.t_end) {
            if (auto l = label_from_name(name)) {
                r.label = *l;
                out.push_back(r);
                continue;
            }
        }
        if (diag)
            diag->push_back("truth table line " + std::to_string(lineno) + ": parse error");
    }
    return out;
}

}  // namespace rrc
