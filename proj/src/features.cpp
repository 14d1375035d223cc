#include "rrc/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rrc {

namespace {

constexpr double kEps = 1e-9;
constexpr double kAreaFloor = 1e-6;       // m^2, density denominator floor
constexpr double kMaxCircleRadius = 1e3;  // m, collinear cap
constexpr double kChi2_95_df2 = 5.991;
constexpr double kChi2_95_df4 = 9.488;
constexpr double kStationaryDoppler = 0.1;  // m/s
constexpr double kVolcanRefRange = 50.0;    // m

double population_std(const std::vector<double>& v, double mean) {
    double m2 = 0.0;
    for (double x : v) m2 += (x - mean) * (x - mean);
    return std::sqrt(m2 / static_cast<double>(v.size()));
}

}  // namespace

const char* category_name(FeatureCategory c) {
    static const char* names[kNumCategories] = {"A", "R", "P", "V", "S", "D"};
    return names[static_cast<int>(c)];
}

FeatureCatalog::FeatureCatalog() {
    using C = FeatureCategory;
    int i = 0;
    auto add = [&](const char* name, C cat) { entries_[i] = {i, name, cat}; ++i; };

    // base statistics, one row per statistic over amplitude/range/angle/velocity
    static const char* kStats[9] = {"min",      "max",      "mean",
                                    "meanAbsDev", "var",    "stdDev",
                                    "skewness", "kurtosis", "spread"};
    static const char* kBases[4] = {"Amplitude", "Range", "Angle", "Velocity"};
    static const C kBaseCats[4] = {C::A, C::R, C::P, C::V};
    static std::array<std::string, 36> stat_names;
    for (int s = 0; s < 9; ++s) {
        for (int b = 0; b < 4; ++b) {
            stat_names[s * 4 + b] = std::string(kStats[s]) + kBases[b];
            add(stat_names[s * 4 + b].c_str(), kBaseCats[b]);
        }
    }

    // nonlinear transforms of four key base values
    add("logMeanAmplitude", C::A);
    add("sqrtMeanAmplitude", C::A);
    add("quadMeanAmplitude", C::A);
    add("logRangeSpread", C::R);
    add("sqrtRangeSpread", C::R);
    add("quadRangeSpread", C::R);
    add("logAngleSpread", C::P);
    add("sqrtAngleSpread", C::P);
    add("quadAngleSpread", C::P);
    add("logMeanVelocity", C::V);
    add("sqrtMeanVelocity", C::V);
    add("quadMeanVelocity", C::V);

    // covariance eigenvalue families: 2 from x/y, 4 from x/y/v_r/A
    add("covEVxy1", C::S);
    add("covEVxy2", C::S);
    add("covEVxyva1", C::D);
    add("covEVxyva2", C::D);
    add("covEVxyva3", C::D);
    add("covEVxyva4", C::D);
    add("covEV2xy1", C::S);
    add("covEV2xy2", C::S);
    add("covEV2xyva1", C::D);
    add("covEV2xyva2", C::D);
    add("covEV2xyva3", C::D);
    add("covEV2xyva4", C::D);
    add("con95axisXy1", C::S);
    add("con95axisXy2", C::S);
    add("con95axisXyva1", C::D);
    add("con95axisXyva2", C::D);
    add("con95axisXyva3", C::D);
    add("con95axisXyva4", C::D);

    add("ampSum", C::A);
    add("phiSpreadComp", C::P);
    add("stdDevDoppler", C::V);
    add("fracStationary", C::V);
    add("nDetects", C::S);
    add("nDetectsComp", C::S);
    add("nDetectsVolcan", C::S);
    add("corePoints", C::S);
    add("meanDist", C::S);
    add("clusterWidth", C::S);
    add("maxDistDev", C::S);
    add("cbo1", C::S);
    add("cbo2", C::S);
    add("cbo3", C::S);
    add("rectHullArea", C::S);
    add("rectHullPerimeter", C::S);
    add("rectHullDensity", C::S);
    add("convexHullArea", C::S);
    add("convexHullPerimeter", C::S);
    add("convexHullDensity", C::S);
    add("circleFitRadius", C::S);
    add("circularity", C::S);
    add("compactness", C::S);
    add("xyLinearity", C::S);
    add("rVrLinearity", C::D);
    add("phiVrLinearity", C::D);
    add("majorVrLinearity", C::D);
    add("minorVrLinearity", C::D);
    add("rVrSpread", C::D);
    add("phiVrSpread", C::D);
    add("majorVrSpread", C::D);
    add("minorVrSpread", C::D);

    if (i != kNumFeatures) throw std::logic_error("feature catalog size mismatch");
}

const FeatureCatalog& FeatureCatalog::instance() {
    static FeatureCatalog cat;
    return cat;
}

int FeatureCatalog::index_of(std::string_view name) const {
    for (const auto& e : entries_) {
        if (name == e.name) return e.index;
    }
    return -1;
}

std::array<int, kNumCategories> FeatureCatalog::category_counts() const {
    std::array<int, kNumCategories> counts{};
    for (const auto& e : entries_) ++counts[static_cast<int>(e.category)];
    return counts;
}

// ---------------------------------------------------------------------------

std::array<double, 9> base_stats(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("base_stats: empty input");
    const double n = static_cast<double>(values.size());
    double mn = values[0], mx = values[0], sum = 0.0;
    for (double v : values) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        sum += v;
    }
    const double mean = sum / n;
    double mad = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        mad += std::abs(d);
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    mad /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double sd = std::sqrt(m2);
    const double skew = sd > 0.0 ? m3 / (sd * sd * sd) : 0.0;
    const double kurt = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    return {mn, mx, mean, mad, m2, sd, skew, kurt, mx - mn};
}

std::array<double, 12> transforms(double mean_amplitude, double range_spread,
                                  double angle_spread, double mean_velocity) {
    const double in[4] = {mean_amplitude, range_spread, angle_spread, mean_velocity};
    std::array<double, 12> out{};
    for (int k = 0; k < 4; ++k) {
        const double a = std::abs(in[k]);
        out[3 * k + 0] = std::log(a + kEps);
        out[3 * k + 1] = std::sqrt(a);
        out[3 * k + 2] = in[k] * in[k];
    }
    return out;
}

namespace {

// Eigenvalues of the 2x2 population covariance of (x, y), descending.
// Also reports the major-axis angle for the micro-Doppler projections.
struct Cov2 {
    double l1 = 0.0, l2 = 0.0;
    double theta = 0.0;  // major axis direction
};

Cov2 xy_covariance_eigen(const std::vector<RadarDetection>& dets) {
    const double n = static_cast<double>(dets.size());
    double mx = 0.0, my = 0.0;
    for (const auto& d : dets) {
        mx += d.x;
        my += d.y;
    }
    mx /= n;
    my /= n;
    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (const auto& d : dets) {
        const double dx = d.x - mx, dy = d.y - my;
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    cxx /= n;
    cyy /= n;
    cxy /= n;
    Cov2 out;
    const double tr = cxx + cyy;
    const double disc = std::sqrt(std::max(0.0, (cxx - cyy) * (cxx - cyy) + 4.0 * cxy * cxy));
    out.l1 = std::max(0.0, 0.5 * (tr + disc));
    out.l2 = std::max(0.0, 0.5 * (tr - disc));
    out.theta = (cxy == 0.0 && cxx == cyy) ? 0.0 : 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    return out;
}

}  // namespace

std::array<double, 18> cov_features(const std::vector<RadarDetection>& dets) {
    if (dets.empty()) throw std::invalid_argument("cov_features: empty input");
    const int n = static_cast<int>(dets.size());
    std::array<double, 18> out{};
    if (n == 1) return out;  // zero covariance everywhere

    const Cov2 c2 = xy_covariance_eigen(dets);

    Eigen::MatrixXd m(n, 4);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = dets[i].x;
        m(i, 1) = dets[i].y;
        m(i, 2) = dets[i].doppler_comp;
        m(i, 3) = dets[i].amplitude;
    }
    const Eigen::RowVector4d mean = m.colwise().mean();
    m.rowwise() -= mean;
    const Eigen::Matrix4d cov = (m.transpose() * m) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(cov);
    Eigen::Vector4d ev = solver.eigenvalues();  // ascending

    double lam[6] = {c2.l1, c2.l2, std::max(0.0, ev(3)), std::max(0.0, ev(2)),
                     std::max(0.0, ev(1)), std::max(0.0, ev(0))};
    for (int k = 0; k < 6; ++k) {
        out[k] = lam[k];
        out[6 + k] = lam[k] * lam[k];
        const double chi2 = k < 2 ? kChi2_95_df2 : kChi2_95_df4;
        out[12 + k] = 2.0 * std::sqrt(chi2 * lam[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geometry helpers

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2& a, const Point2& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n <= 2) return pts;
    std::vector<Point2> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    for (int i = n - 2, lower = k + 1; i >= 0; --i) {  // upper
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_area(const std::vector<Point2>& poly) {
    const int n = static_cast<int>(poly.size());
    if (n < 3) return 0.0;
    double a = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return std::abs(a) * 0.5;
}

double polygon_perimeter(const std::vector<Point2>& poly) {
    const int n = static_cast<int>(poly.size());
    if (n < 2) return 0.0;
    if (n == 2)  // degenerate segment, traversed both ways
        return 2.0 * std::hypot(poly[1].x - poly[0].x, poly[1].y - poly[0].y);
    double per = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % n];
        per += std::hypot(q.x - p.x, q.y - p.y);
    }
    return per;
}

MinAreaRect min_area_rect(const std::vector<Point2>& pts) {
    MinAreaRect best;
    const std::vector<Point2> hull = convex_hull(pts);
    const int n = static_cast<int>(hull.size());
    if (n == 0) return best;
    if (n == 1) return best;
    if (n == 2) {
        best.area = 0.0;
        best.perimeter = 2.0 * std::hypot(hull[1].x - hull[0].x, hull[1].y - hull[0].y);
        return best;
    }
    best.area = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const Point2& p = hull[i];
        const Point2& q = hull[(i + 1) % n];
        const double len = std::hypot(q.x - p.x, q.y - p.y);
        if (len == 0.0) continue;
        const double ux = (q.x - p.x) / len, uy = (q.y - p.y) / len;
        double lo_u = 0.0, hi_u = 0.0, lo_v = 0.0, hi_v = 0.0;
        bool first = true;
        for (const Point2& r : hull) {
            const double u = (r.x - p.x) * ux + (r.y - p.y) * uy;
            const double v = -(r.x - p.x) * uy + (r.y - p.y) * ux;
            if (first) {
                lo_u = hi_u = u;
                lo_v = hi_v = v;
                first = false;
            } else {
                lo_u = std::min(lo_u, u);
                hi_u = std::max(hi_u, u);
                lo_v = std::min(lo_v, v);
                hi_v = std::max(hi_v, v);
            }
        }
        const double w = hi_u - lo_u, h = hi_v - lo_v;
        if (w * h < best.area) {
            best.area = w * h;
            best.perimeter = 2.0 * (w + h);
        }
    }
    return best;
}

double circle_fit_radius(const std::vector<Point2>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) return kMaxCircleRadius;
    // Kasa fit: x^2 + y^2 + D x + E y + F ~ 0, linear least squares. The fit
    // runs on centroid-centered coordinates: the radius is translation
    // invariant and centering keeps the normal equations well conditioned for
    // clusters far from the origin.
    double cx = 0.0, cy = 0.0;
    for (const Point2& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (const Point2& q : pts) {
        const Point2 p{q.x - cx, q.y - cy};
        const Eigen::Vector3d row(p.x, p.y, 1.0);
        a += row * row.transpose();
        b -= (p.x * p.x + p.y * p.y) * row;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() < 3) return kMaxCircleRadius;  // collinear or degenerate
    const Eigen::Vector3d sol = lu.solve(b);
    const double r2 = 0.25 * (sol(0) * sol(0) + sol(1) * sol(1)) - sol(2);
    if (!(r2 > 0.0)) return kMaxCircleRadius;
    return std::min(std::sqrt(r2), kMaxCircleRadius);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("pearson: size mismatch");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

std::array<double, 22> geometry_features(const std::vector<RadarDetection>& dets,
                                         int core_count) {
    if (dets.empty()) throw std::invalid_argument("geometry_features: empty input");
    const int n = static_cast<int>(dets.size());
    const double nd = static_cast<double>(n);
    std::array<double, 22> out{};

    double amp_sum = 0.0, mean_range = 0.0, cx = 0.0, cy = 0.0;
    double phi_min = 0.0, phi_max = 0.0;
    std::vector<Point2> pts(n);
    for (int i = 0; i < n; ++i) {
        const auto& d = dets[i];
        amp_sum += d.amplitude;
        const double r = std::hypot(d.x, d.y);
        const double phi = std::atan2(d.y, d.x);
        mean_range += r;
        if (i == 0) {
            phi_min = phi_max = phi;
        } else {
            phi_min = std::min(phi_min, phi);
            phi_max = std::max(phi_max, phi);
        }
        cx += d.x;
        cy += d.y;
        pts[i] = {d.x, d.y};
    }
    mean_range /= nd;
    cx /= nd;
    cy /= nd;
    const double angle_spread = phi_max - phi_min;

    // pairwise distances
    double mean_dist = 0.0, width = 0.0;
    int wi = 0, wj = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
            mean_dist += d;
            if (d > width) {
                width = d;
                wi = i;
                wj = j;
            }
        }
    }
    if (n > 1) mean_dist /= nd * (nd - 1.0) * 0.5;

    // mean distance to the line through the two farthest points
    double max_dist_dev = 0.0;
    if (width > 0.0) {
        const double ax = pts[wi].x, ay = pts[wi].y;
        const double ux = (pts[wj].x - ax) / width, uy = (pts[wj].y - ay) / width;
        for (const auto& p : pts)
            max_dist_dev += std::abs(-(p.x - ax) * uy + (p.y - ay) * ux);
        max_dist_dev /= nd;
    }

    // cumulative binary occupancy: 8 sectors on 3 concentric circles around
    // the centroid, radii 1/3, 2/3, 1 of the max centroid distance
    double rmax = 0.0;
    std::vector<double> cdist(n), cang(n);
    for (int i = 0; i < n; ++i) {
        cdist[i] = std::hypot(pts[i].x - cx, pts[i].y - cy);
        cang[i] = std::atan2(pts[i].y - cy, pts[i].x - cx);
        rmax = std::max(rmax, cdist[i]);
    }
    for (int c = 0; c < 3; ++c) {
        const double radius = rmax * (c + 1) / 3.0;
        bool occupied[8] = {};
        for (int i = 0; i < n; ++i) {
            if (cdist[i] <= radius + 1e-12) {
                int s = static_cast<int>(std::floor((cang[i] + M_PI) / (M_PI / 4.0)));
                s = std::clamp(s, 0, 7);
                occupied[s] = true;
            }
        }
        int cnt = 0;
        for (bool o : occupied) cnt += o ? 1 : 0;
        out[9 + c] = cnt;
    }

    const std::vector<Point2> hull = convex_hull(pts);
    const double hull_area = polygon_area(hull);
    const double hull_per = polygon_perimeter(hull);
    const MinAreaRect rect = min_area_rect(pts);

    double compactness = 0.0;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        compactness += cdist[i];
        xs[i] = pts[i].x;
        ys[i] = pts[i].y;
    }
    compactness /= nd;

    out[0] = amp_sum;
    out[1] = angle_spread * mean_range;  // phiSpreadComp
    out[2] = nd;
    out[3] = nd * mean_range;  // nDetectsComp
    out[4] = nd * (mean_range / kVolcanRefRange) * (mean_range / kVolcanRefRange);
    out[5] = static_cast<double>(core_count) / nd;
    out[6] = mean_dist;
    out[7] = width;
    out[8] = max_dist_dev;
    out[12] = rect.area;
    out[13] = rect.perimeter;
    out[14] = nd / std::max(rect.area, kAreaFloor);
    out[15] = hull_area;
    out[16] = hull_per;
    out[17] = nd / std::max(hull_area, kAreaFloor);
    out[18] = circle_fit_radius(pts);
    out[19] = hull_per > 0.0 ? 4.0 * M_PI * hull_area / (hull_per * hull_per) : 0.0;
    out[20] = compactness;
    out[21] = std::abs(pearson(xs, ys));
    return out;
}

std::array<double, 10> microdoppler_features(const std::vector<RadarDetection>& dets) {
    if (dets.empty()) throw std::invalid_argument("microdoppler_features: empty input");
    const int n = static_cast<int>(dets.size());
    const double nd = static_cast<double>(n);

    std::vector<double> raw(n), vr(n), rr(n), phi(n);
    double raw_mean = 0.0;
    int stationary = 0;
    for (int i = 0; i < n; ++i) {
        raw[i] = dets[i].doppler_raw;
        vr[i] = dets[i].doppler_comp;
        rr[i] = std::hypot(dets[i].x, dets[i].y);
        phi[i] = std::atan2(dets[i].y, dets[i].x);
        raw_mean += raw[i];
        if (std::abs(vr[i]) < kStationaryDoppler) ++stationary;
    }
    raw_mean /= nd;

    const Cov2 c2 = xy_covariance_eigen(dets);
    double mx = 0.0, my = 0.0;
    for (const auto& d : dets) {
        mx += d.x;
        my += d.y;
    }
    mx /= nd;
    my /= nd;
    const double ct = std::cos(c2.theta), st = std::sin(c2.theta);
    std::vector<double> umaj(n), umin(n);
    for (int i = 0; i < n; ++i) {
        const double dx = dets[i].x - mx, dy = dets[i].y - my;
        umaj[i] = dx * ct + dy * st;
        umin[i] = -dx * st + dy * ct;
    }

    auto spread = [](const std::vector<double>& v) {
        const auto [mn, mx2] = std::minmax_element(v.begin(), v.end());
        return *mx2 - *mn;
    };
    const double vr_spread = std::max(spread(vr), kEps);

    std::array<double, 10> out{};
    out[0] = population_std(raw, raw_mean);
    out[1] = static_cast<double>(stationary) / nd;
    out[2] = pearson(rr, vr);
    out[3] = pearson(phi, vr);
    out[4] = pearson(umaj, vr);
    out[5] = pearson(umin, vr);
    out[6] = spread(rr) / vr_spread;
    out[7] = spread(phi) / vr_spread;
    out[8] = spread(umaj) / vr_spread;
    out[9] = spread(umin) / vr_spread;
    return out;
}

FeatureVector extract_all(const ClusterSample& sample) {
    if (sample.detections.empty())
        throw std::invalid_argument("extract_all: empty cluster sample");
    const auto& dets = sample.detections;
    const int n = static_cast<int>(dets.size());

    // base values in the vehicle frame: amplitude, range, angle, compensated
    // Doppler
    std::vector<double> amp(n), rng(n), ang(n), vel(n);
    for (int i = 0; i < n; ++i) {
        amp[i] = dets[i].amplitude;
        rng[i] = std::hypot(dets[i].x, dets[i].y);
        ang[i] = std::atan2(dets[i].y, dets[i].x);
        vel[i] = dets[i].doppler_comp;
    }
    const auto sa = base_stats(amp);
    const auto sr = base_stats(rng);
    const auto sp = base_stats(ang);
    const auto sv = base_stats(vel);

    FeatureVector fv;
    fv.instance_id = sample.instance_id;
    fv.window_start = sample.window_start;
    fv.label = sample.label;
    fv.augmented = sample.augmented;

    for (int s = 0; s < 9; ++s) {
        fv.values[s * 4 + 0] = sa[s];
        fv.values[s * 4 + 1] = sr[s];
        fv.values[s * 4 + 2] = sp[s];
        fv.values[s * 4 + 3] = sv[s];
    }
    const auto tf = transforms(sa[2], sr[8], sp[8], sv[2]);
    for (int k = 0; k < 12; ++k) fv.values[36 + k] = tf[k];
    const auto cf = cov_features(dets);
    for (int k = 0; k < 18; ++k) fv.values[48 + k] = cf[k];
    const auto gf = geometry_features(dets, sample.core_count);
    const auto mf = microdoppler_features(dets);
    fv.values[66] = gf[0];  // ampSum
    fv.values[67] = gf[1];  // phiSpreadComp
    fv.values[68] = mf[0];  // stdDevDoppler
    fv.values[69] = mf[1];  // fracStationary
    for (int k = 2; k < 22; ++k) fv.values[70 + k - 2] = gf[k];
    for (int k = 2; k < 10; ++k) fv.values[90 + k - 2] = mf[k];

    for (double v : fv.values) {
        if (!std::isfinite(v)) throw std::runtime_error("extract_all: non-finite feature");
    }
    return fv;
}

// ---------------------------------------------------------------------------

std::vector<SequenceSample> build_sequences(const std::vector<FeatureVector>& windows,
                                            int max_len) {
    std::vector<SequenceSample> out;
    if (windows.empty()) return out;
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].window_start <= windows[i - 1].window_start)
            throw std::invalid_argument("build_sequences: windows not sorted");
        if (windows[i].instance_id != windows[0].instance_id)
            throw std::invalid_argument("build_sequences: mixed instances");
    }
    const int n = static_cast<int>(windows.size());
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        SequenceSample s;
        s.instance_id = windows[i].instance_id;
        s.label = windows[i].label;
        s.augmented = windows[i].augmented;
        const int lo = std::max(0, i - max_len + 1);
        s.feature_vectors.assign(windows.begin() + lo, windows.begin() + i + 1);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------

void write_feature_matrix(std::ostream& os, const std::vector<FeatureVector>& rows) {
    const auto& cat = FeatureCatalog::instance();
    os << "# " << cat.version() << '\n';
    os << "instance_id,window_start,label,augmented";
    for (int i = 0; i < kNumFeatures; ++i) os << ',' << cat.entry(i).name;
    os << '\n';
    char buf[40];
    std::string line;
    for (const auto& fv : rows) {
        line.clear();
        line += std::to_string(fv.instance_id);
        line += ',';
        std::snprintf(buf, sizeof(buf), "%.17g", fv.window_start);
        line += buf;
        line += ',';
        line += label_name(fv.label);
        line += ',';
        line += fv.augmented ? '1' : '0';
        for (double v : fv.values) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            line += buf;
        }
        line += '\n';
        os << line;
    }
}

std::vector<FeatureVector> read_feature_matrix(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != std::string("# ") + kFeatureCatalogVersion)
        throw std::runtime_error("feature matrix: bad or missing catalog version");
    if (!std::getline(is, line)) throw std::runtime_error("feature matrix: missing header");
    std::vector<FeatureVector> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        FeatureVector fv;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        fv.instance_id = std::stoll(field);
        std::getline(ss, field, ',');
        fv.window_start = std::stod(field);
        std::getline(ss, field, ',');
        const auto l = label_from_name(field);
        if (!l) throw std::runtime_error("feature matrix: unknown label " + field);
        fv.label = *l;
        std::getline(ss, field, ',');
        fv.augmented = field == "1";
        for (int i = 0; i < kNumFeatures; ++i) {
            if (!std::getline(ss, field, ','))
                throw std::runtime_error("feature matrix: short row");
            fv.values[i] = std::stod(field);
        }
        out.push_back(fv);
    }
    return out;
}

}  // namespace rrc
