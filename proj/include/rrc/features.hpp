#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rrc/radar_data.hpp"

namespace rrc {

constexpr int kNumFeatures = 98;
constexpr const char* kFeatureCatalogVersion = "rrc-catalog-1";

// Feature categories: amplitude, range, angle (phi), Doppler velocity,
// shape/compactness, spatial Doppler distribution.
enum class FeatureCategory : int { A = 0, R = 1, P = 2, V = 3, S = 4, D = 5 };
constexpr int kNumCategories = 6;
const char* category_name(FeatureCategory c);

struct CatalogEntry {
    int index;
    const char* name;
    FeatureCategory category;
};

// Versioned, ordered map of feature slot -> name -> category. Exactly 98
// entries; category counts are fixed (A=13, R=12, P=13, V=14, S=26, D=20).
class FeatureCatalog {
public:
    static const FeatureCatalog& instance();

    const CatalogEntry& entry(int index) const { return entries_[index]; }
    int size() const { return kNumFeatures; }
    const char* version() const { return kFeatureCatalogVersion; }
    int index_of(std::string_view name) const;  // -1 if unknown
    std::array<int, kNumCategories> category_counts() const;

private:
    FeatureCatalog();
    std::array<CatalogEntry, kNumFeatures> entries_;
};

// Ordered 98-slot vector aligned to the catalog, plus sample provenance.
struct FeatureVector {
    std::array<double, kNumFeatures> values{};
    std::int64_t instance_id = 0;
    double window_start = 0.0;
    Label label = Label::garbage;
    bool augmented = false;
};

// Sequence of up to 8 feature vectors from consecutive windows of one
// instance; the classifier input unit.
struct SequenceSample {
    std::int64_t instance_id = 0;
    Label label = Label::garbage;
    bool augmented = false;
    std::vector<FeatureVector> feature_vectors;  // length in [1, 8]
};

// ---------------------------------------------------------------------------
// Feature family operations (catalog order: base stats, transforms,
// covariance, specific singles, geometry, micro-Doppler)

// min, max, mean, meanAbsDev, var, stdDev, skewness, kurtosis, spread.
// Population moments; skewness/kurtosis are 0 for zero variance.
std::array<double, 9> base_stats(const std::vector<double>& values);

// log(|u|+eps), sqrt(|u|), u^2 for each of meanAmplitude, rangeSpread,
// angleSpread, meanVelocity; grouped per input.
std::array<double, 12> transforms(double mean_amplitude, double range_spread,
                                  double angle_spread, double mean_velocity);

// covEV (2 from x/y, 4 from x/y/v_r/A, descending), covEV2 (squares),
// con95axis (95% confidence ellipse/ellipsoid axis lengths).
std::array<double, 18> cov_features(const std::vector<RadarDetection>& dets);

// AmpSum, PhiSpreadComp, nDetects, nDetectsComp, nDetectsVolcan, CorePoints,
// MeanDist, clusterWidth, maxDistDev, CBO x3, RectHull x3, ConvexHull x3,
// CircleFit, Circularity, Compactness, xyLinearity.
std::array<double, 22> geometry_features(const std::vector<RadarDetection>& dets,
                                         int core_count);

// StdDevDoppler, fracStationary, rVrLinearity, phiVrLinearity,
// majorVrLinearity, minorVrLinearity, rVrSpread, phiVrSpread, majorVrSpread,
// minorVrSpread.
std::array<double, 10> microdoppler_features(const std::vector<RadarDetection>& dets);

// Full 98-slot extraction in catalog order; all values finite.
FeatureVector extract_all(const ClusterSample& sample);

// ---------------------------------------------------------------------------
// Geometry helpers (exposed for reuse and testing)

struct Point2 {
    double x = 0.0, y = 0.0;
};

// Convex hull, monotone chain, counter-clockwise, no duplicate endpoint.
// Collinear inputs yield a 2-point "hull" (a segment); n<=2 returns input.
std::vector<Point2> convex_hull(std::vector<Point2> pts);

double polygon_area(const std::vector<Point2>& poly);
double polygon_perimeter(const std::vector<Point2>& poly);

struct MinAreaRect {
    double area = 0.0;
    double perimeter = 0.0;
};

// Minimum-area enclosing rectangle via rotating calipers over hull edges.
MinAreaRect min_area_rect(const std::vector<Point2>& pts);

// Algebraic (Kasa) least-squares circle radius; degenerate/collinear input is
// capped at 1000 m.
double circle_fit_radius(const std::vector<Point2>& pts);

// Pearson correlation with the zero-variance -> 0 convention.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Sequence building

// For each window index i of one instance (ordered by window_start), emits
// the sequence over windows max(0, i-7)..i. Rejects unsorted input.
std::vector<SequenceSample> build_sequences(const std::vector<FeatureVector>& windows,
                                            int max_len = kMaxSequenceLen);

// ---------------------------------------------------------------------------
// Feature matrix export (comma-separated, catalog version comment first)

void write_feature_matrix(std::ostream& os, const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_feature_matrix(std::istream& is);

}  // namespace rrc
