// Query-point sampling: the seven baseline strategies, linear-distribution
// sampling (weight ~ tau - g_S(p), zero beyond tau), the distance mask, and
// labeled-dataset assembly.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsamp/fields.hpp"

namespace qsamp {

struct StrategyComponent {
    enum class Kind { Uniform, SurfaceGaussian, Linear };
    Kind kind = Kind::Uniform;
    double fraction = 1.0;
    double sigma = 0.0;    // SurfaceGaussian: noise std-dev in box units
    double mu = 1.0;       // Linear: weight slope (cancels under normalized rejection)
    double tau = 0.1;      // Linear: cutoff distance

    static StrategyComponent uniform(double fraction) { return {Kind::Uniform, fraction, 0, 0, 0}; }
    static StrategyComponent surface_gaussian(double fraction, double sigma) {
        return {Kind::SurfaceGaussian, fraction, sigma, 0, 0};
    }
    static StrategyComponent linear(double fraction, double mu, double tau) {
        return {Kind::Linear, fraction, 0, mu, tau};
    }
};

struct StrategySpec {
    std::string name;  // builtin name or "custom"
    std::vector<StrategyComponent> components;

    // fractions positive, summing to 1 +- 1e-12; sigma/mu/tau positive.
    void check() const;
};

inline const std::vector<std::string> kBuiltinStrategies = {
    "S_UNI", "S_HFS", "S_HNS", "S_BS", "S_FUNS", "S_FSNS", "S_NS", "S_Linear"};

// Expands a builtin name into its component mixture and validates that every
// component receives at least one point of the budget n.
StrategySpec expand_builtin(const std::string& name, long n, double linear_mu = 1.0,
                            double linear_tau = 0.1);

// Largest-remainder apportionment of n across fractions; sums to n exactly.
std::vector<long> apportion(const std::vector<double>& fractions, long n);

std::vector<Vec3> sample_uniform(long n, Rng& rng);

// Surface sample plus isotropic N(0, sigma^2) per-coordinate noise; points
// leaving the box are resampled rather than clamped.
std::vector<Vec3> sample_surface_gaussian(const Shape& shape, long n, double sigma, Rng& rng);

// Rejection sampling with uniform proposals and acceptance (tau - g)/tau for
// g <= tau. Throws DataError when acceptance starves (< 1e-5 over a probe
// batch).
std::vector<Vec3> sample_linear(const Shape& shape, long n, double mu, double tau, Rng& rng);

// Draws the full mixture; component i uses rng substream i. Returns the
// per-component counts alongside the points (concatenated in component order).
struct StrategySamples {
    std::vector<Vec3> points;
    std::vector<long> component_counts;
};
StrategySamples sample_strategy(const Shape& shape, const StrategySpec& spec, long n, Rng& rng);

struct LabeledDataset {
    std::vector<Vec3> points;
    std::vector<double> values;
    std::vector<uint8_t> mask;  // empty, or per point: 1 kept, 0 masked

    // provenance
    std::string strategy;
    StrategySpec spec;
    uint64_t seed = 0;
    FieldSpec field;
    std::string shape_id;
    std::vector<long> component_counts;
    std::optional<double> mask_tau;
    std::string command;  // producing command echo (CLI)

    long size() const { return static_cast<long>(points.size()); }
    bool has_mask() const { return !mask.empty(); }
    long kept_count() const;
};

// Annotates which points survive the distance mask: kept iff g_S(p) <= tau.
// Masked points get their stored value forced to tau. UDF only.
void apply_distance_mask(LabeledDataset& dataset, const Shape& shape, double tau);

LabeledDataset build_dataset(const ShapeRef& shape, const StrategySpec& spec,
                             const FieldSpec& field, long n, uint64_t seed,
                             std::optional<double> mask_tau = std::nullopt);
LabeledDataset build_dataset(const ShapeRef& shape, const std::string& builtin,
                             const FieldSpec& field, long n, uint64_t seed,
                             std::optional<double> mask_tau = std::nullopt);

// JSON manifest at `path`, binary blob at `path + ".bin"`.
void save_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

// Checksum of the serialized blob (determinism audits).
uint32_t dataset_checksum(const LabeledDataset& dataset);

}  // namespace qsamp
