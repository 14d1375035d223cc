#pragma once

// Independent reference computation of the full 98-slot feature vector.
// Shares no numerical code with the library: moments are two-pass, the 4x4
// eigenvalues come from a Jacobi sweep, hull quantities from gift wrapping,
// and the circle fit solves its normal equations by Cramer's rule.

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rrc/features.hpp"
#include "rrc/radar_data.hpp"

namespace oracle {

inline double pearson_ref(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline double circle_radius_ref(std::vector<std::pair<double, double>> pts) {
    // x^2 + y^2 + D x + E y + F = 0 normal equations on centered coordinates,
    // solved by Cramer (the radius is translation invariant)
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    if (!pts.empty()) {
        mx /= static_cast<double>(pts.size());
        my /= static_cast<double>(pts.size());
    }
    for (auto& [x, y] : pts) {
        x -= mx;
        y -= my;
    }
    double sxx = 0, sxy = 0, sx = 0, syy = 0, sy = 0, s1 = 0;
    double bx = 0, by = 0, b1 = 0;
    for (const auto& [x, y] : pts) {
        const double z = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        sx += x;
        syy += y * y;
        sy += y;
        s1 += 1.0;
        bx -= z * x;
        by -= z * y;
        b1 -= z;
    }
    const double a[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, s1}};
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double det = det3(a);
    // scale-aware singularity guard comparable to a 1e-10 rank threshold
    double scale = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (pts.size() < 3 || std::abs(det) <= 1e-24 * scale * scale * scale + 1e-300)
        return 1000.0;
    double m[3][3];
    double sol[3];
    const double b[3] = {bx, by, b1};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = j == c ? b[i] : a[i][j];
        sol[c] = det3(m) / det;
    }
    const double r2 = 0.25 * (sol[0] * sol[0] + sol[1] * sol[1]) - sol[2];
    if (!(r2 > 0)) return 1000.0;
    return std::min(std::sqrt(r2), 1000.0);
}

inline std::array<double, 98> feature_vector_ref(const rrc::ClusterSample& sample) {
    const auto& dets = sample.detections;
    const int n = static_cast<int>(dets.size());
    const double nd = n;
    std::array<double, 98> out{};

    std::vector<double> amp(n), rng(n), ang(n), vel(n), raw(n);
    std::vector<std::pair<double, double>> pts(n);
    for (int i = 0; i < n; ++i) {
        amp[i] = dets[i].amplitude;
        rng[i] = std::hypot(dets[i].x, dets[i].y);
        ang[i] = std::atan2(dets[i].y, dets[i].x);
        vel[i] = dets[i].doppler_comp;
        raw[i] = dets[i].doppler_raw;
        pts[i] = {dets[i].x, dets[i].y};
    }

    const Stats sa = stats(amp), sr = stats(rng), sp = stats(ang), sv = stats(vel);
    const auto put_stats = [&](int row, const Stats& s) {
        const double v[9] = {s.min, s.max,  s.mean, s.mad, s.var,
                             s.stddev, s.skew, s.kurt, s.spread};
        for (int k = 0; k < 9; ++k) out[k * 4 + row] = v[k];
    };
    put_stats(0, sa);
    put_stats(1, sr);
    put_stats(2, sp);
    put_stats(3, sv);

    const double tin[4] = {sa.mean, sr.spread, sp.spread, sv.mean};
    for (int k = 0; k < 4; ++k) {
        const double a = std::abs(tin[k]);
        out[36 + 3 * k + 0] = std::log(a + 1e-9);
        out[36 + 3 * k + 1] = std::sqrt(a);
        out[36 + 3 * k + 2] = tin[k] * tin[k];
    }

    // covariance eigen families
    if (n > 1) {
        double mx = 0, my = 0, mv = 0, ma = 0;
        for (const auto& d : dets) {
            mx += d.x;
            my += d.y;
            mv += d.doppler_comp;
            ma += d.amplitude;
        }
        mx /= nd;
        my /= nd;
        mv /= nd;
        ma /= nd;
        std::vector<std::vector<double>> c2(2, std::vector<double>(2, 0.0));
        std::vector<std::vector<double>> c4(4, std::vector<double>(4, 0.0));
        for (const auto& d : dets) {
            const double v[4] = {d.x - mx, d.y - my, d.doppler_comp - mv,
                                 d.amplitude - ma};
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) c4[i][j] += v[i] * v[j];
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) c2[i][j] += v[i] * v[j];
        }
        for (auto& row : c2)
            for (double& x : row) x /= nd;
        for (auto& row : c4)
            for (double& x : row) x /= nd;
        const auto e2 = jacobi_eigenvalues(c2);
        const auto e4 = jacobi_eigenvalues(c4);
        const double lam[6] = {std::max(0.0, e2[0]), std::max(0.0, e2[1]),
                               std::max(0.0, e4[0]), std::max(0.0, e4[1]),
                               std::max(0.0, e4[2]), std::max(0.0, e4[3])};
        for (int k = 0; k < 6; ++k) {
            out[48 + k] = lam[k];
            out[54 + k] = lam[k] * lam[k];
            out[60 + k] = 2.0 * std::sqrt((k < 2 ? 5.991 : 9.488) * lam[k]);
        }
    }

    // singles
    double amp_sum = 0;
    for (double a : amp) amp_sum += a;
    out[66] = amp_sum;
    out[67] = sp.spread * sr.mean;
    out[68] = stats(raw).stddev;
    int stationary = 0;
    for (double v : vel)
        if (std::abs(v) < 0.1) ++stationary;
    out[69] = stationary / nd;

    // geometry block (slots 70..89)
    out[70] = nd;
    out[71] = nd * sr.mean;
    out[72] = nd * (sr.mean / 50.0) * (sr.mean / 50.0);
    out[73] = sample.core_count / nd;

    double mean_dist = 0, width = 0;
    int wi = 0, wj = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = std::hypot(pts[i].first - pts[j].first,
                                        pts[i].second - pts[j].second);
            mean_dist += d;
            if (d > width) {
                width = d;
                wi = i;
                wj = j;
            }
        }
    }
    if (n > 1) mean_dist /= nd * (nd - 1.0) / 2.0;
    out[74] = mean_dist;
    out[75] = width;
    double mdd = 0;
    if (width > 0) {
        const double ax = pts[wi].first, ay = pts[wi].second;
        const double ux = (pts[wj].first - ax) / width;
        const double uy = (pts[wj].second - ay) / width;
        for (const auto& [x, y] : pts) mdd += std::abs(-(x - ax) * uy + (y - ay) * ux);
        mdd /= nd;
    }
    out[76] = mdd;

    double cx = 0, cy = 0;
    for (const auto& [x, y] : pts) {
        cx += x;
        cy += y;
    }
    cx /= nd;
    cy /= nd;
    double rmax = 0;
    std::vector<double> cdist(n), cang(n);
    for (int i = 0; i < n; ++i) {
        cdist[i] = std::hypot(pts[i].first - cx, pts[i].second - cy);
        cang[i] = std::atan2(pts[i].second - cy, pts[i].first - cx);
        rmax = std::max(rmax, cdist[i]);
    }
    for (int c = 0; c < 3; ++c) {
        const double radius = rmax * (c + 1) / 3.0;
        bool occ[8] = {};
        for (int i = 0; i < n; ++i) {
            if (cdist[i] <= radius + 1e-12) {
                int s = static_cast<int>(std::floor((cang[i] + M_PI) / (M_PI / 4.0)));
                if (s < 0) s = 0;
                if (s > 7) s = 7;
                occ[s] = true;
            }
        }
        int cnt = 0;
        for (bool o : occ) cnt += o;
        out[77 + c] = cnt;
    }

    const RectOracle rect = min_rect(pts);
    out[80] = rect.area;
    out[81] = rect.perimeter;
    out[82] = nd / std::max(rect.area, 1e-6);
    const auto hull = gift_wrap_hull(pts);
    const double ha = shoelace_area(hull);
    const double hp = poly_perimeter(hull);
    out[83] = ha;
    out[84] = hp;
    out[85] = nd / std::max(ha, 1e-6);
    out[86] = circle_radius_ref(pts);
    out[87] = hp > 0 ? 4.0 * M_PI * ha / (hp * hp) : 0.0;
    double comp = 0;
    for (double d : cdist) comp += d;
    out[88] = comp / nd;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = pts[i].first;
        ys[i] = pts[i].second;
    }
    out[89] = std::abs(pearson_ref(xs, ys));

    // spatial Doppler distribution (slots 90..97)
    out[90] = pearson_ref(rng, vel);
    out[91] = pearson_ref(ang, vel);
    double cxx = 0, cyy = 0, cxy = 0;
    for (int i = 0; i < n; ++i) {
        cxx += (xs[i] - cx) * (xs[i] - cx);
        cyy += (ys[i] - cy) * (ys[i] - cy);
        cxy += (xs[i] - cx) * (ys[i] - cy);
    }
    cxx /= nd;
    cyy /= nd;
    cxy /= nd;
    const double theta =
        (cxy == 0.0 && cxx == cyy) ? 0.0 : 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    std::vector<double> umaj(n), umin(n);
    for (int i = 0; i < n; ++i) {
        const double dx = xs[i] - cx, dy = ys[i] - cy;
        umaj[i] = dx * std::cos(theta) + dy * std::sin(theta);
        umin[i] = -dx * std::sin(theta) + dy * std::cos(theta);
    }
    out[92] = pearson_ref(umaj, vel);
    out[93] = pearson_ref(umin, vel);
    const double vspread = std::max(sv.spread, 1e-9);
    out[94] = sr.spread / vspread;
    out[95] = sp.spread / vspread;
    out[96] = (stats(umaj).spread) / vspread;
    out[97] = (stats(umin).spread) / vspread;
    return out;
}

// Comparison helper. Slot 81 (rectangle perimeter) is special: when several
// hull-edge rectangles tie on minimal area, the perimeter depends on which
// argmin is taken, so any area-tied candidate is accepted.
inline bool feature_matches(const rrc::ClusterSample& sample, int slot, double lib,
                            const std::array<double, 98>& ref, double tol = 1e-6) {
    const auto close = [tol](double a, double b) {
        return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
    };
    if (slot == 81) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& d : sample.detections) pts.emplace_back(d.x, d.y);
        const auto rect = min_rect(pts);
        if (rect.tied_perimeters.empty()) return close(lib, ref[slot]);
        for (double p : rect.tied_perimeters)
            if (close(lib, p)) return true;
        return false;
    }
    return close(lib, ref[slot]);
}

inline rrc::ClusterSample random_sample(rrc::Rng& rng, int n) {
    rrc::ClusterSample s;
    s.instance_id = 1;
    s.detections = random_cluster(rng, n, rng.uniform(0.05, 3.0));
    s.core_count = 0;
    for (const auto& d : s.detections) s.core_count += d.core ? 1 : 0;
    return s;
}

}  // namespace oracle
