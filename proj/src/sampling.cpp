#include "qsamp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "qsamp/serialize.hpp"

namespace qsamp {

using nlohmann::json;

void StrategySpec::check() const {
    if (components.empty()) throw UsageError("strategy has no components");
    double total = 0;
    for (const auto& c : components) {
        if (!(c.fraction > 0)) throw UsageError("component fractions must be positive");
        total += c.fraction;
        switch (c.kind) {
            case StrategyComponent::Kind::SurfaceGaussian:
                if (!(c.sigma > 0)) throw UsageError("surface sigma must be positive");
                break;
            case StrategyComponent::Kind::Linear:
                if (!(c.mu > 0)) throw UsageError("linear mu must be positive");
                if (!(c.tau > 0)) throw UsageError("linear tau must be positive");
                break;
            case StrategyComponent::Kind::Uniform:
                break;
        }
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw UsageError("component fractions must sum to 1 (got " + std::to_string(total) + ")");
}

std::vector<long> apportion(const std::vector<double>& fractions, long n) {
    std::vector<long> counts(fractions.size());
    std::vector<std::pair<double, size_t>> remainders(fractions.size());
    long assigned = 0;
    for (size_t i = 0; i < fractions.size(); ++i) {
        double exact = fractions[i] * static_cast<double>(n);
        counts[i] = static_cast<long>(std::floor(exact));
        remainders[i] = {exact - static_cast<double>(counts[i]), i};
        assigned += counts[i];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long k = 0; k < n - assigned; ++k) counts[remainders[k].second]++;
    return counts;
}

StrategySpec expand_builtin(const std::string& name, long n, double linear_mu,
                            double linear_tau) {
    using C = StrategyComponent;
    StrategySpec spec;
    spec.name = name;
    if (name == "S_UNI") {
        spec.components = {C::uniform(1.0)};
    } else if (name == "S_HFS") {
        spec.components = {C::uniform(0.5), C::surface_gaussian(0.5, 0.1)};
    } else if (name == "S_HNS") {
        spec.components = {C::uniform(0.5), C::surface_gaussian(0.5, 0.01)};
    } else if (name == "S_BS") {
        spec.components = {C::surface_gaussian(0.5, 0.1), C::surface_gaussian(0.5, 0.01)};
    } else if (name == "S_FUNS") {
        // 1% uniform replacing part of the fixed budget, rest the S_NS mixture
        spec.components = {C::uniform(0.01), C::surface_gaussian(0.495, 0.01),
                           C::surface_gaussian(0.495, 0.001)};
    } else if (name == "S_FSNS") {
        spec.components = {C::surface_gaussian(0.01, 0.1), C::surface_gaussian(0.495, 0.01),
                           C::surface_gaussian(0.495, 0.001)};
    } else if (name == "S_NS") {
        spec.components = {C::surface_gaussian(0.5, 0.01), C::surface_gaussian(0.5, 0.001)};
    } else if (name == "S_Linear") {
        spec.components = {C::linear(1.0, linear_mu, linear_tau)};
    } else {
        throw UsageError("unknown strategy '" + name + "'");
    }
    spec.check();

    if (n <= 0) throw UsageError("strategy budget n must be positive");
    std::vector<double> fractions;
    for (const auto& c : spec.components) fractions.push_back(c.fraction);
    for (long count : apportion(fractions, n))
        if (count == 0)
            throw UsageError(name + ": budget n=" + std::to_string(n) +
                             " rounds a component to zero points");
    return spec;
}

std::vector<Vec3> sample_uniform(long n, Rng& rng) {
    std::vector<Vec3> out;
    out.reserve(std::max<long>(n, 0));
    for (long i = 0; i < n; ++i) out.push_back(rng.uniform_box());
    return out;
}

std::vector<Vec3> sample_surface_gaussian(const Shape& shape, long n, double sigma, Rng& rng) {
    if (!(sigma > 0)) throw UsageError("sigma must be positive");
    std::vector<Vec3> out;
    out.reserve(std::max<long>(n, 0));
    while (static_cast<long>(out.size()) < n) {
        Vec3 p = shape.sample_surface_one(rng).point;
        p += Vec3{rng.normal() * sigma, rng.normal() * sigma, rng.normal() * sigma};
        if (in_unit_box(p)) out.push_back(p);  // outside the box: resample
    }
    return out;
}

std::vector<Vec3> sample_linear(const Shape& shape, long n, double mu, double tau, Rng& rng) {
    if (!(mu > 0)) throw UsageError("linear mu must be positive");
    if (!(tau > 0)) throw UsageError("linear tau must be positive");
    // mu scales the unnormalized weight only; acceptance is (tau - g)/tau.
    constexpr long kProbe = 200000;
    std::vector<Vec3> out;
    out.reserve(std::max<long>(n, 0));
    long proposed = 0;
    while (static_cast<long>(out.size()) < n) {
        Vec3 p = rng.uniform_box();
        ++proposed;
        double g = shape.distance(p);
        if (g <= tau && rng.uniform() < (tau - g) / tau) out.push_back(p);
        if (proposed == kProbe && out.size() < static_cast<size_t>(kProbe) / 100000)
            throw DataError("sample_linear: acceptance starved (tau too small for shape)");
    }
    return out;
}

StrategySamples sample_strategy(const Shape& shape, const StrategySpec& spec, long n, Rng& rng) {
    spec.check();
    if (n < 0) throw UsageError("n must be non-negative");
    std::vector<double> fractions;
    for (const auto& c : spec.components) fractions.push_back(c.fraction);
    StrategySamples result;
    result.component_counts = apportion(fractions, n);
    result.points.reserve(n);
    for (size_t i = 0; i < spec.components.size(); ++i) {
        const auto& c = spec.components[i];
        Rng sub = rng.split(i);
        std::vector<Vec3> part;
        switch (c.kind) {
            case StrategyComponent::Kind::Uniform:
                part = sample_uniform(result.component_counts[i], sub);
                break;
            case StrategyComponent::Kind::SurfaceGaussian:
                part = sample_surface_gaussian(shape, result.component_counts[i], c.sigma, sub);
                break;
            case StrategyComponent::Kind::Linear:
                part = sample_linear(shape, result.component_counts[i], c.mu, c.tau, sub);
                break;
        }
        result.points.insert(result.points.end(), part.begin(), part.end());
    }
    return result;
}

long LabeledDataset::kept_count() const {
    if (mask.empty()) return size();
    return std::count(mask.begin(), mask.end(), uint8_t{1});
}

void apply_distance_mask(LabeledDataset& dataset, const Shape& shape, double tau) {
    if (dataset.field.kind != FieldKind::Udf)
        throw UsageError("distance mask supports UDF only (got " +
                         to_string(dataset.field.kind) + ")");
    if (!(tau > 0)) throw UsageError("mask tau must be positive");
    dataset.mask.assign(dataset.points.size(), uint8_t{1});
    for (size_t i = 0; i < dataset.points.size(); ++i) {
        if (shape.distance(dataset.points[i]) > tau) {
            dataset.mask[i] = 0;
            dataset.values[i] = tau;  // predetermined value for masked points
        }
    }
    dataset.mask_tau = tau;
}

LabeledDataset build_dataset(const ShapeRef& shape, const StrategySpec& spec,
                             const FieldSpec& field, long n, uint64_t seed,
                             std::optional<double> mask_tau) {
    if (mask_tau && field.kind != FieldKind::Udf)
        throw UsageError("distance mask supports UDF only");
    Rng rng(seed);
    LabeledDataset ds;
    StrategySamples samples = sample_strategy(*shape, spec, n, rng);
    ds.points = std::move(samples.points);
    ds.component_counts = std::move(samples.component_counts);
    ds.values = batch_label(*shape, field, ds.points);
    ds.strategy = spec.name;
    ds.spec = spec;
    ds.seed = seed;
    ds.field = field;
    ds.shape_id = shape->id();
    if (mask_tau) apply_distance_mask(ds, *shape, *mask_tau);
    return ds;
}

LabeledDataset build_dataset(const ShapeRef& shape, const std::string& builtin,
                             const FieldSpec& field, long n, uint64_t seed,
                             std::optional<double> mask_tau) {
    return build_dataset(shape, expand_builtin(builtin, n), field, n, seed, mask_tau);
}

namespace {

json spec_to_json(const StrategySpec& spec) {
    json components = json::array();
    for (const auto& c : spec.components) {
        json jc;
        jc["fraction"] = c.fraction;
        switch (c.kind) {
            case StrategyComponent::Kind::Uniform:
                jc["kind"] = "uniform";
                break;
            case StrategyComponent::Kind::SurfaceGaussian:
                jc["kind"] = "surface_gaussian";
                jc["sigma"] = c.sigma;
                break;
            case StrategyComponent::Kind::Linear:
                jc["kind"] = "linear";
                jc["mu"] = c.mu;
                jc["tau"] = c.tau;
                break;
        }
        components.push_back(jc);
    }
    return json{{"name", spec.name}, {"components", components}};
}

StrategySpec spec_from_json(const json& j) {
    StrategySpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const auto& jc : j.at("components")) {
        StrategyComponent c;
        std::string kind = jc.at("kind").get<std::string>();
        c.fraction = jc.at("fraction").get<double>();
        if (kind == "uniform") {
            c.kind = StrategyComponent::Kind::Uniform;
        } else if (kind == "surface_gaussian") {
            c.kind = StrategyComponent::Kind::SurfaceGaussian;
            c.sigma = jc.at("sigma").get<double>();
        } else if (kind == "linear") {
            c.kind = StrategyComponent::Kind::Linear;
            c.mu = jc.at("mu").get<double>();
            c.tau = jc.at("tau").get<double>();
        } else {
            throw DataError("dataset manifest: unknown component kind '" + kind + "'");
        }
        spec.components.push_back(c);
    }
    return spec;
}

std::vector<uint8_t> dataset_blob(const LabeledDataset& ds) {
    BlobWriter blob;
    std::vector<double> coords;
    coords.reserve(ds.points.size() * 3);
    for (const auto& p : ds.points) {
        coords.push_back(p.x);
        coords.push_back(p.y);
        coords.push_back(p.z);
    }
    blob.put_doubles(coords.data(), coords.size());
    blob.put_doubles(ds.values.data(), ds.values.size());
    if (ds.has_mask()) blob.put_bytes(ds.mask.data(), ds.mask.size());
    return blob.bytes();
}

}  // namespace

uint32_t dataset_checksum(const LabeledDataset& ds) { return crc32(dataset_blob(ds)); }

void save_dataset(const LabeledDataset& ds, const std::string& path) {
    if (ds.values.size() != ds.points.size() ||
        (ds.has_mask() && ds.mask.size() != ds.points.size()))
        throw DataError("save_dataset: inconsistent column lengths");
    auto bytes = dataset_blob(ds);
    std::string blob_path = path + ".bin";

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["type"] = "dataset";
    manifest["count"] = ds.size();
    manifest["has_mask"] = ds.has_mask();
    manifest["blob"] = {{"file", blob_path.substr(blob_path.find_last_of("/\\") + 1)},
                        {"bytes", bytes.size()},
                        {"crc32", crc_hex(crc32(bytes))}};
    json prov;
    prov["strategy"] = ds.strategy;
    prov["spec"] = spec_to_json(ds.spec);
    prov["seed"] = ds.seed;
    prov["field"] = {{"kind", to_string(ds.field.kind)}, {"tau_t", ds.field.tau_t}};
    prov["shape"] = ds.shape_id;
    prov["component_counts"] = ds.component_counts;
    if (ds.mask_tau) prov["mask_tau"] = *ds.mask_tau;
    if (!ds.command.empty()) prov["command"] = ds.command;
    manifest["provenance"] = prov;

    std::string text = manifest.dump(2);
    write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
    write_file_bytes(blob_path, bytes);
}

LabeledDataset load_dataset(const std::string& path) {
    auto manifest_bytes = read_file_bytes(path);
    json manifest;
    try {
        manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
    } catch (const json::exception& e) {
        throw DataError(path + ": bad manifest: " + e.what());
    }
    if (manifest.value("type", "") != "dataset") throw DataError(path + ": not a dataset manifest");
    if (manifest.value("format_version", -1) != kFormatVersion)
        throw DataError(path + ": unsupported format version");

    long n = manifest.at("count").get<long>();
    bool has_mask = manifest.at("has_mask").get<bool>();
    auto blob_bytes = read_file_bytes(path + ".bin");
    if (crc_hex(crc32(blob_bytes)) != manifest.at("blob").at("crc32").get<std::string>())
        throw DataError(path + ": blob checksum mismatch");
    size_t expected = 8 * (3 * n + n) + (has_mask ? n : 0);
    if (blob_bytes.size() != expected) throw DataError(path + ": blob size mismatch");

    LabeledDataset ds;
    BlobReader reader(std::move(blob_bytes));
    std::vector<double> coords(3 * n);
    reader.get_doubles(coords.data(), coords.size());
    ds.points.resize(n);
    for (long i = 0; i < n; ++i)
        ds.points[i] = {coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]};
    ds.values.resize(n);
    reader.get_doubles(ds.values.data(), ds.values.size());
    if (has_mask) {
        ds.mask.resize(n);
        reader.get_bytes(ds.mask.data(), ds.mask.size());
    }

    const json& prov = manifest.at("provenance");
    ds.strategy = prov.at("strategy").get<std::string>();
    ds.spec = spec_from_json(prov.at("spec"));
    ds.seed = prov.at("seed").get<uint64_t>();
    ds.field.kind = field_kind_from_string(prov.at("field").at("kind").get<std::string>());
    ds.field.tau_t = prov.at("field").at("tau_t").get<double>();
    ds.shape_id = prov.at("shape").get<std::string>();
    ds.component_counts = prov.at("component_counts").get<std::vector<long>>();
    if (prov.contains("mask_tau")) ds.mask_tau = prov.at("mask_tau").get<double>();
    if (prov.contains("command")) ds.command = prov.at("command").get<std::string>();
    return ds;
}

}  // namespace qsamp
