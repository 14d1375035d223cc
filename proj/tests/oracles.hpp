#pragma once

// Independent brute-force reference implementations used by the unit and
// acceptance tests. These deliberately avoid the library's own helpers and
// Eigen: moments are two-pass, eigenvalues come from a Jacobi sweep, geometry
// is O(n^2)/angle-scan, and the aggregation/detector formulas are literal
// transcriptions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "rrc/radar_data.hpp"
#include "rrc/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Moments (two-pass, population)

struct Stats {
    double min = 0, max = 0, mean = 0, mad = 0, var = 0, stddev = 0, skew = 0,
           kurt = 0, spread = 0;
};

inline Stats stats(const std::vector<double>& v) {
    Stats s;
    const double n = static_cast<double>(v.size());
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.spread = s.max - s.min;
    for (double x : v) s.mean += x;
    s.mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        const double d = x - s.mean;
        s.mad += std::abs(d);
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    s.mad /= n;
    s.var = m2 / n;
    s.stddev = std::sqrt(s.var);
    if (s.var > 0) {
        s.skew = (m3 / n) / (s.stddev * s.stddev * s.stddev);
        s.kurt = (m4 / n) / (s.var * s.var);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Jacobi eigenvalue sweep for small symmetric matrices; returns descending
// eigenvalues.

inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

// ---------------------------------------------------------------------------
// Geometry

// O(n^2) hull area via the shoelace over a gift-wrapping hull
inline std::vector<std::pair<double, double>> gift_wrap_hull(
    std::vector<std::pair<double, double>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const int n = static_cast<int>(pts.size());
    if (n <= 2) return pts;
    std::vector<std::pair<double, double>> hull;
    int start = 0;
    for (int i = 1; i < n; ++i)
        if (pts[i] < pts[start]) start = i;
    int cur = start;
    do {
        hull.push_back(pts[cur]);
        int next = (cur + 1) % n;
        for (int i = 0; i < n; ++i) {
            const double cross = (pts[next].first - pts[cur].first) *
                                     (pts[i].second - pts[cur].second) -
                                 (pts[next].second - pts[cur].second) *
                                     (pts[i].first - pts[cur].first);
            const auto d2 = [&](int a, int b) {
                const double dx = pts[a].first - pts[b].first;
                const double dy = pts[a].second - pts[b].second;
                return dx * dx + dy * dy;
            };
            if (cross > 1e-12 || (std::abs(cross) <= 1e-12 && d2(i, cur) > d2(next, cur)))
                next = i;
        }
        cur = next;
        if (hull.size() > pts.size()) break;  // numerical safety
    } while (cur != start);
    return hull;
}

inline double shoelace_area(const std::vector<std::pair<double, double>>& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.first * q.second - q.first * p.second;
    }
    return std::abs(a) / 2.0;
}

inline double poly_perimeter(const std::vector<std::pair<double, double>>& poly) {
    if (poly.size() < 2) return 0.0;
    double per = 0;
    const std::size_t n = poly.size();
    const std::size_t edges = n == 2 ? 1 : n;
    for (std::size_t i = 0; i < edges; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        per += std::hypot(q.first - p.first, q.second - p.second);
    }
    return n == 2 ? 2.0 * per : per;
}

// Minimum-area rectangle by checking the axis-aligned bounding box after
// rotating the point set to each hull edge direction.
struct RectOracle {
    double area = 0, perimeter = 0;
    // perimeters of every hull-edge rectangle whose area ties the minimum
    // within relative 1e-9 — the perimeter at a near-tie is argmin-dependent
    std::vector<double> tied_perimeters;
};

inline RectOracle min_rect(const std::vector<std::pair<double, double>>& pts) {
    const auto hull = gift_wrap_hull(pts);
    RectOracle best;
    const std::size_t n = hull.size();
    if (n < 2) return best;
    std::vector<std::pair<double, double>> rects;  // (area, perimeter) per edge
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = hull[i];
        const auto& q = hull[(i + 1) % n];
        const double ang = std::atan2(q.second - p.second, q.first - p.first);
        const double c = std::cos(-ang), s = std::sin(-ang);
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& r : pts) {
            const double x = c * r.first - s * r.second;
            const double y = s * r.first + c * r.second;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        const double w = xmax - xmin, h = ymax - ymin;
        rects.emplace_back(w * h, 2.0 * (w + h));
    }
    best.area = rects.front().first;
    best.perimeter = rects.front().second;
    for (const auto& [a, per] : rects) {
        if (a < best.area) {
            best.area = a;
            best.perimeter = per;
        }
    }
    for (const auto& [a, per] : rects)
        if (a <= best.area * (1.0 + 1e-6) + 1e-12) best.tied_perimeters.push_back(per);
    return best;
}

// ---------------------------------------------------------------------------
// DBSCAN reference: textbook O(n^2) with explicit seed-set expansion.

struct DbscanRef {
    std::vector<int> cluster;  // -1 noise
    std::vector<bool> core;
};

inline DbscanRef dbscan_ref(const std::vector<rrc::RadarDetection>& pts,
                            double eps_xy, double eps_t, double eps_v, int min_pts) {
    const int n = static_cast<int>(pts.size());
    auto close = [&](int a, int b) {
        const double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
        const double dt = pts[a].t - pts[b].t;
        const double dv = pts[a].doppler_comp - pts[b].doppler_comp;
        const double d = (dx * dx + dy * dy) / (eps_xy * eps_xy) +
                         dt * dt / (eps_t * eps_t) + dv * dv / (eps_v * eps_v);
        return d <= 1.0;
    };
    std::vector<std::vector<int>> nbrs(n);
    DbscanRef r;
    r.cluster.assign(n, -1);
    r.core.assign(n, false);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (close(i, j)) nbrs[i].push_back(j);
        r.core[i] = static_cast<int>(nbrs[i].size()) >= min_pts;
    }
    std::vector<bool> visited(n, false);
    int cid = 0;
    for (int i = 0; i < n; ++i) {
        if (visited[i] || !r.core[i]) continue;
        std::vector<int> stack{i};
        visited[i] = true;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            r.cluster[p] = cid;
            if (!r.core[p]) continue;
            for (int q : nbrs[p]) {
                if (r.cluster[q] == -1 && !visited[q]) {
                    visited[q] = true;
                    stack.push_back(q);
                } else if (r.cluster[q] == -1) {
                    r.cluster[q] = cid;
                }
            }
        }
        ++cid;
    }
    return r;
}

// canonical partition: set of point-index sets, plus the noise set
inline std::set<std::set<int>> partition(const std::vector<int>& cluster) {
    std::map<int, std::set<int>> groups;
    for (std::size_t i = 0; i < cluster.size(); ++i)
        if (cluster[i] >= 0) groups[cluster[i]].insert(static_cast<int>(i));
    std::set<std::set<int>> out;
    for (auto& [id, g] : groups) out.insert(std::move(g));
    return out;
}

// ---------------------------------------------------------------------------
// Mutual information on discrete data (direct probability tables)

inline double entropy(const std::vector<int>& x) {
    std::map<int, int> cnt;
    for (int v : x) ++cnt[v];
    const double n = static_cast<double>(x.size());
    double h = 0;
    for (const auto& [v, c] : cnt) {
        const double p = c / n;
        h -= p * std::log(p);
    }
    return h;
}

inline double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
    std::vector<int> joint(x.size());
    std::map<std::pair<int, int>, int> remap;
    for (std::size_t i = 0; i < x.size(); ++i)
        joint[i] = remap.emplace(std::make_pair(x[i], y[i]),
                                 static_cast<int>(remap.size())).first->second;
    return entropy(x) + entropy(y) - entropy(joint);
}

inline std::vector<int> pair_variable(const std::vector<int>& a,
                                      const std::vector<int>& b) {
    std::vector<int> out(a.size());
    std::map<std::pair<int, int>, int> remap;
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = remap.emplace(std::make_pair(a[i], b[i]),
                               static_cast<int>(remap.size())).first->second;
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation / hidden-detector scalar formulas (literal)

inline std::vector<double> agg_scores(int k, const std::vector<double>& pij,
                                      const std::vector<double>& ova) {
    std::vector<double> s(k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (j != i) s[i] += pij[i * k + j] * (ova[i] + ova[j]);
    return s;
}

inline bool hidden_ova(const std::vector<double>& ova, double thr) {
    double m = ova[0];
    for (double p : ova) m = std::max(m, p);
    return m < thr;
}

inline bool hidden_vote(int k, const std::vector<double>& pij,
                        const std::vector<double>& ova, int thr) {
    for (int i = 0; i < k; ++i) {
        int votes = ova[i] > 0.5 ? 1 : 0;
        for (int j = 0; j < k; ++j)
            if (j != i && pij[i * k + j] > 0.5) ++votes;
        if (votes >= thr) return false;
    }
    return true;
}

inline bool hidden_ovoova(int k, const std::vector<double>& pij,
                          const std::vector<double>& ova, double thr) {
    const auto s = agg_scores(k, pij, ova);
    const double c = std::accumulate(s.begin(), s.end(), 0.0);
    if (c <= 0.0) return true;
    for (double v : s)
        if (v / c >= thr) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Random cluster helper

inline std::vector<rrc::RadarDetection> random_cluster(rrc::Rng& rng, int n,
                                                       double spread = 2.0) {
    std::vector<rrc::RadarDetection> dets(n);
    const double cx = rng.uniform(5.0, 40.0), cy = rng.uniform(-20.0, 20.0);
    double t = rng.uniform(0.0, 10.0);
    for (auto& d : dets) {
        d.sensor_id = 0;
        d.t = t;
        t += rng.uniform(0.0, 0.01);
        d.x = cx + rng.gaussian(0.0, spread);
        d.y = cy + rng.gaussian(0.0, spread);
        d.range = std::hypot(d.x, d.y);
        d.azimuth = std::atan2(d.y, d.x);
        d.doppler_comp = rng.gaussian(0.0, 2.0);
        d.doppler_raw = d.doppler_comp - rng.uniform(0.0, 3.0);
        d.amplitude = rng.gaussian(15.0, 4.0);
        d.core = rng.uniform() < 0.7;
    }
    return dets;
}

}  // namespace oracle
