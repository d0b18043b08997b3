#include "qsamp/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "qsamp/serialize.hpp"

namespace qsamp {

using nlohmann::json;

std::string to_string(Archetype a) {
    switch (a) {
        case Archetype::GlobalMlp: return "GlobalMlp";
        case Archetype::GridInterp: return "GridInterp";
        case Archetype::AutoDecoder: return "AutoDecoder";
    }
    return "?";
}

Archetype archetype_from_string(const std::string& name) {
    if (name == "GlobalMlp" || name == "mlp") return Archetype::GlobalMlp;
    if (name == "GridInterp" || name == "grid") return Archetype::GridInterp;
    if (name == "AutoDecoder" || name == "autodecoder") return Archetype::AutoDecoder;
    throw UsageError("unknown archetype '" + name + "'");
}

ArchConfig ArchConfig::global_mlp(int n_shapes) {
    ArchConfig a;
    a.archetype = Archetype::GlobalMlp;
    a.feature_dim = 16;
    a.hidden = {64, 64, 64};
    a.n_shapes = n_shapes;
    return a;
}

ArchConfig ArchConfig::grid_interp() {
    ArchConfig a;
    a.archetype = Archetype::GridInterp;
    a.feature_dim = 8;
    a.hidden = {64, 64};
    a.grid_res = 16;
    a.n_shapes = 1;
    return a;
}

ArchConfig ArchConfig::auto_decoder(int n_shapes) {
    ArchConfig a;
    a.archetype = Archetype::AutoDecoder;
    a.feature_dim = 32;
    a.hidden = {128, 128, 128};
    a.n_shapes = n_shapes;
    // Small decoder init keeps the early optimizer transient gentle; see the
    // training notes in the README.
    a.init_scale = 0.05;
    return a;
}

void ArchConfig::check() const {
    if (feature_dim < 0) throw UsageError("feature_dim must be >= 0");
    if (hidden.empty()) throw UsageError("at least one hidden layer required");
    for (int h : hidden)
        if (h <= 0) throw UsageError("hidden widths must be positive");
    if (archetype == Archetype::GridInterp && grid_res < 2)
        throw UsageError("grid_res must be >= 2");
    if (n_shapes <= 0) throw UsageError("n_shapes must be positive");
    if (!(init_scale > 0)) throw UsageError("init_scale must be positive");
}

namespace {

struct Layout {
    std::vector<long> w_off, b_off;
    std::vector<int> in_dim, out_dim;
    long feature_off = 0;
    long total = 0;
    // cache key
    Archetype key_archetype{};
    int key_feature = -1, key_grid = -1, key_shapes = -1;
    std::vector<int> key_hidden;

    bool matches(const ArchConfig& a) const {
        return key_feature == a.feature_dim && key_archetype == a.archetype &&
               key_grid == a.grid_res && key_shapes == a.n_shapes && key_hidden == a.hidden;
    }
};

Layout layout_of(const ArchConfig& arch) {
    Layout l;
    long off = 0;
    int in = arch.input_dim();
    for (int i = 0; i < arch.layer_count(); ++i) {
        int out = i < static_cast<int>(arch.hidden.size()) ? arch.hidden[i] : 1;
        l.w_off.push_back(off);
        off += static_cast<long>(in) * out;
        l.b_off.push_back(off);
        off += out;
        l.in_dim.push_back(in);
        l.out_dim.push_back(out);
        in = out;
    }
    l.feature_off = off;
    off += arch.feature_rows() * arch.feature_dim;
    l.total = off;
    l.key_archetype = arch.archetype;
    l.key_feature = arch.feature_dim;
    l.key_grid = arch.grid_res;
    l.key_shapes = arch.n_shapes;
    l.key_hidden = arch.hidden;
    return l;
}

inline double activate(Activation act, double x) {
    return act == Activation::Relu ? (x > 0 ? x : 0.0) : std::tanh(x);
}

inline double activate_grad(Activation act, double post) {
    return act == Activation::Relu ? (post > 0 ? 1.0 : 0.0) : 1.0 - post * post;
}

// Trilinear corner indices and weights for a clamped query point.
void trilinear_setup(const ArchConfig& arch, const Vec3& p_in, NetWorkspace& ws) {
    int g = arch.grid_res;
    ws.clamped = clamp_to_unit_box(p_in);
    ws.clamped_flag = !(ws.clamped == p_in);
    double t[3];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
        double x = (ws.clamped[a] + kBoxHalf) * (g - 1);
        int i = std::min(static_cast<int>(x), g - 2);
        i0[a] = i;
        t[a] = x - i;
    }
    int c = 0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx, ++c) {
                long idx = (i0[0] + dx) +
                           static_cast<long>(g) * ((i0[1] + dy) + static_cast<long>(g) * (i0[2] + dz));
                ws.corner[c] = idx;
                ws.corner_w[c] = (dx ? t[0] : 1 - t[0]) * (dy ? t[1] : 1 - t[1]) *
                                 (dz ? t[2] : 1 - t[2]);
            }
}

// d(corner weight)/d(p[axis]) for corner c with offsets (dx,dy,dz).
double trilinear_weight_grad(const ArchConfig& arch, const NetWorkspace&, int c, int axis,
                             const double t[3]) {
    int g = arch.grid_res;
    int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    int d[3] = {dx, dy, dz};
    double grad = static_cast<double>(g - 1);  // d(x_lattice)/d(p)
    for (int a = 0; a < 3; ++a) {
        if (a == axis)
            grad *= d[a] ? 1.0 : -1.0;
        else
            grad *= d[a] ? t[a] : 1 - t[a];
    }
    return grad;
}

void resolve_features(const ToyModel& model, const Vec3& p, int shape_id, NetWorkspace& ws,
                      const double* external_z, double* feat) {
    const ArchConfig& arch = model.arch;
    if (arch.feature_dim == 0) return;
    if (external_z) {
        std::copy(external_z, external_z + arch.feature_dim, feat);
        return;
    }
    if (arch.archetype == Archetype::GridInterp) {
        trilinear_setup(arch, p, ws);
        std::fill(feat, feat + arch.feature_dim, 0.0);
        long base = model.feature_offset();
        for (int c = 0; c < 8; ++c) {
            const double* row = model.params.data() + base + ws.corner[c] * arch.feature_dim;
            double w = ws.corner_w[c];
            for (int f = 0; f < arch.feature_dim; ++f) feat[f] += w * row[f];
        }
        return;
    }
    if (shape_id < 0 || shape_id >= arch.n_shapes)
        throw UsageError("shape_id out of range");
    auto row = model.feature_row(shape_id);
    std::copy(row.begin(), row.end(), feat);
}

const Layout& cached_layout(const ArchConfig& arch, NetWorkspace&) {
    thread_local Layout cache;
    if (!cache.matches(arch)) cache = layout_of(arch);
    return cache;
}

}  // namespace

long ArchConfig::param_count() const {
    check();
    return layout_of(*this).total;
}

std::span<const double> ToyModel::layer_weights(int layer) const {
    Layout l = layout_of(arch);
    return {params.data() + l.w_off[layer],
            static_cast<size_t>(l.in_dim[layer]) * l.out_dim[layer]};
}

std::span<const double> ToyModel::layer_biases(int layer) const {
    Layout l = layout_of(arch);
    return {params.data() + l.b_off[layer], static_cast<size_t>(l.out_dim[layer])};
}

long ToyModel::feature_offset() const { return layout_of(arch).feature_off; }

std::span<const double> ToyModel::feature_row(long row) const {
    return {params.data() + feature_offset() + row * arch.feature_dim,
            static_cast<size_t>(arch.feature_dim)};
}

std::span<double> ToyModel::feature_row_mut(long row) {
    return {params.data() + feature_offset() + row * arch.feature_dim,
            static_cast<size_t>(arch.feature_dim)};
}

ToyModel init_model(const ArchConfig& arch, const FieldSpec& field, uint64_t seed) {
    arch.check();
    if (field.kind == FieldKind::Tsdf && !(field.tau_t > 0))
        throw UsageError("TSDF tau_t must be positive");
    ToyModel m;
    m.arch = arch;
    m.field = field;
    m.init_seed = seed;
    Layout l = layout_of(arch);
    m.params.assign(l.total, 0.0);
    Rng rng(seed);
    for (int layer = 0; layer < arch.layer_count(); ++layer) {
        double std_dev = arch.init_scale / std::sqrt(static_cast<double>(l.in_dim[layer]));
        double* w = m.params.data() + l.w_off[layer];
        for (long i = 0; i < static_cast<long>(l.in_dim[layer]) * l.out_dim[layer]; ++i)
            w[i] = rng.normal() * std_dev;
        // biases stay zero
    }
    double* feat = m.params.data() + l.feature_off;
    for (long i = 0; i < arch.feature_rows() * arch.feature_dim; ++i)
        feat[i] = rng.normal() * arch.feature_init_sigma;
    return m;
}

double forward_raw(const ToyModel& model, const Vec3& p, int shape_id, NetWorkspace& ws,
                   const double* external_z) {
    const ArchConfig& arch = model.arch;
    const Layout& l = cached_layout(arch, ws);
    ws.input.resize(arch.input_dim());
    Vec3 q = arch.archetype == Archetype::GridInterp ? clamp_to_unit_box(p) : p;
    ws.input[0] = q.x;
    ws.input[1] = q.y;
    ws.input[2] = q.z;
    resolve_features(model, p, shape_id, ws, external_z, ws.input.data() + 3);

    ws.activations.resize(arch.layer_count() + 1);
    ws.activations[0] = ws.input;
    for (int layer = 0; layer < arch.layer_count(); ++layer) {
        const double* w = model.params.data() + l.w_off[layer];
        const double* b = model.params.data() + l.b_off[layer];
        const auto& prev = ws.activations[layer];
        auto& cur = ws.activations[layer + 1];
        cur.assign(l.out_dim[layer], 0.0);
        bool last = layer == arch.layer_count() - 1;
        for (int o = 0; o < l.out_dim[layer]; ++o) {
            const double* wrow = w + static_cast<long>(o) * l.in_dim[layer];
            double acc = b[o];
            for (int i = 0; i < l.in_dim[layer]; ++i) acc += wrow[i] * prev[i];
            cur[o] = last ? acc : activate(arch.activation, acc);
        }
    }
    return ws.activations[arch.layer_count()][0];
}

double apply_head(const ToyModel& model, double raw) {
    switch (model.field.kind) {
        case FieldKind::Occ: return 1.0 / (1.0 + std::exp(-raw));
        case FieldKind::Sdf:
        case FieldKind::Tsdf: return raw;
        case FieldKind::Udf: return std::abs(raw);
    }
    return raw;
}

double predict(const ToyModel& model, const Vec3& p, int shape_id, const double* external_z) {
    NetWorkspace ws;
    return apply_head(model, forward_raw(model, p, shape_id, ws, external_z));
}

namespace {

// Backprop of d(raw)/d(stuff) given filled workspace. Accumulates parameter
// gradients scaled by `draw` into grad (when non-null); writes the gradient
// w.r.t. the network input into dx (when non-null).
void backward_sample(const ToyModel& model, NetWorkspace& ws, double draw, double* grad,
                     double* dx, int shape_id, bool grads_to_features) {
    const ArchConfig& arch = model.arch;
    const Layout& l = cached_layout(arch, ws);
    int layers = arch.layer_count();

    ws.delta.assign(1, draw);
    for (int layer = layers - 1; layer >= 0; --layer) {
        const auto& prev = ws.activations[layer];
        const double* w = model.params.data() + l.w_off[layer];
        if (grad) {
            double* gw = grad + l.w_off[layer];
            double* gb = grad + l.b_off[layer];
            for (int o = 0; o < l.out_dim[layer]; ++o) {
                double d = ws.delta[o];
                if (d == 0) continue;
                double* gwrow = gw + static_cast<long>(o) * l.in_dim[layer];
                for (int i = 0; i < l.in_dim[layer]; ++i) gwrow[i] += d * prev[i];
                gb[o] += d;
            }
        }
        ws.delta_next.assign(l.in_dim[layer], 0.0);
        for (int o = 0; o < l.out_dim[layer]; ++o) {
            double d = ws.delta[o];
            if (d == 0) continue;
            const double* wrow = w + static_cast<long>(o) * l.in_dim[layer];
            for (int i = 0; i < l.in_dim[layer]; ++i) ws.delta_next[i] += d * wrow[i];
        }
        if (layer > 0)
            for (int i = 0; i < l.in_dim[layer]; ++i)
                ws.delta_next[i] *= activate_grad(arch.activation, prev[i]);
        ws.delta.swap(ws.delta_next);
    }
    // ws.delta now holds d(raw)/d(input)
    if (dx) std::copy(ws.delta.begin(), ws.delta.begin() + arch.input_dim(), dx);
    if (grad && grads_to_features && arch.feature_dim > 0) {
        const double* dfeat = ws.delta.data() + 3;
        if (arch.archetype == Archetype::GridInterp) {
            double* gfeat = grad + l.feature_off;
            for (int c = 0; c < 8; ++c) {
                double w = ws.corner_w[c];
                double* row = gfeat + ws.corner[c] * arch.feature_dim;
                for (int f = 0; f < arch.feature_dim; ++f) row[f] += w * dfeat[f];
            }
        } else {
            double* row = grad + l.feature_off + static_cast<long>(shape_id) * arch.feature_dim;
            for (int f = 0; f < arch.feature_dim; ++f) row[f] += dfeat[f];
        }
    }
}

double pointwise_loss_grad(const FieldSpec& field, double raw, double target, double& draw) {
    switch (field.kind) {
        case FieldKind::Occ: {
            double z = raw, y = target;
            double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
            draw = 1.0 / (1.0 + std::exp(-z)) - y;
            return loss;
        }
        case FieldKind::Sdf: {
            double e = raw - target;
            draw = e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
            return std::abs(e);
        }
        case FieldKind::Udf: {
            double pred = std::abs(raw);
            double e = pred - target;
            double se = e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
            draw = se * (raw > 0 ? 1.0 : (raw < 0 ? -1.0 : 0.0));
            return std::abs(e);
        }
        case FieldKind::Tsdf: {
            double t = field.tau_t;
            double cp = std::clamp(raw, -t, t);
            double cy = std::clamp(target, -t, t);
            double e = cp - cy;
            double se = e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
            draw = std::abs(raw) < t ? se : 0.0;
            return std::abs(e);
        }
    }
    throw UsageError("bad field kind");
}

}  // namespace

Vec3 input_gradient(const ToyModel& model, const Vec3& p, int shape_id, NetWorkspace& ws,
                    const double* external_z) {
    forward_raw(model, p, shape_id, ws, external_z);
    std::vector<double> dx(model.arch.input_dim());
    backward_sample(model, ws, 1.0, nullptr, dx.data(), shape_id, false);
    Vec3 g{dx[0], dx[1], dx[2]};
    if (model.arch.archetype == Archetype::GridInterp && !external_z) {
        // feature path: d(feat_f)/d(p) through the trilinear weights
        const ArchConfig& arch = model.arch;
        int gres = arch.grid_res;
        double t[3];
        for (int a = 0; a < 3; ++a) {
            double x = (ws.clamped[a] + kBoxHalf) * (gres - 1);
            int i = std::min(static_cast<int>(x), gres - 2);
            t[a] = x - i;
        }
        long base = model.feature_offset();
        const double* dfeat = ws.delta.data() + 3;
        for (int c = 0; c < 8; ++c) {
            const double* row = model.params.data() + base + ws.corner[c] * arch.feature_dim;
            for (int axis = 0; axis < 3; ++axis) {
                double wg = trilinear_weight_grad(arch, {}, c, axis, t);
                double acc = 0;
                for (int f = 0; f < arch.feature_dim; ++f) acc += dfeat[f] * row[f];
                g[axis] += wg * acc;
            }
        }
        if (ws.clamped_flag) {
            // outside the box the clamped coordinate is constant
            for (int a = 0; a < 3; ++a)
                if (p[a] < -kBoxHalf || p[a] > kBoxHalf) g[a] = 0;
        }
    }
    return g;
}

double loss_value(const FieldSpec& field, std::span<const double> raw,
                  std::span<const double> target) {
    if (raw.size() != target.size()) throw UsageError("loss: length mismatch");
    if (raw.empty()) return 0.0;
    double total = 0, draw;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i]) || !std::isfinite(target[i]))
            throw DataError("loss: non-finite input");
        total += pointwise_loss_grad(field, raw[i], target[i], draw);
    }
    return total / static_cast<double>(raw.size());
}

double loss_and_grad(const FieldSpec& field, std::span<const double> raw,
                     std::span<const double> target, std::span<double> draw) {
    if (raw.size() != target.size() || raw.size() != draw.size())
        throw UsageError("loss: length mismatch");
    if (raw.empty()) return 0.0;
    double total = 0;
    double n = static_cast<double>(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        double d;
        total += pointwise_loss_grad(field, raw[i], target[i], d);
        draw[i] = d / n;
    }
    return total / n;
}

double batch_loss(const ToyModel& model, const LabeledDataset& dataset,
                  std::span<const long> idx, int shape_id, double latent_reg) {
    NetWorkspace ws;
    double total = 0, draw;
    for (long i : idx) {
        double raw = forward_raw(model, dataset.points[i], shape_id, ws);
        total += pointwise_loss_grad(model.field, raw, dataset.values[i], draw);
        if (latent_reg > 0 && model.arch.archetype == Archetype::AutoDecoder) {
            auto z = model.feature_row(shape_id);
            double z2 = 0;
            for (double v : z) z2 += v * v;
            total += latent_reg * z2;
        }
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

std::vector<double> batch_gradient(const ToyModel& model, const LabeledDataset& dataset,
                                   std::span<const long> idx, int shape_id, double latent_reg) {
    std::vector<double> grad(model.params.size(), 0.0);
    if (idx.empty()) return grad;
    NetWorkspace ws;
    double scale = 1.0 / static_cast<double>(idx.size());
    for (long i : idx) {
        double raw = forward_raw(model, dataset.points[i], shape_id, ws);
        double draw;
        pointwise_loss_grad(model.field, raw, dataset.values[i], draw);
        backward_sample(model, ws, draw * scale, grad.data(), nullptr, shape_id, true);
        if (latent_reg > 0 && model.arch.archetype == Archetype::AutoDecoder) {
            auto z = model.feature_row(shape_id);
            double* gz = grad.data() + model.feature_offset() +
                         static_cast<long>(shape_id) * model.arch.feature_dim;
            for (int f = 0; f < model.arch.feature_dim; ++f)
                gz[f] += scale * 2.0 * latent_reg * z[f];
        }
    }
    return grad;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, const TrainConfig& cfg,
              long offset = 0) {
        ++t;
        double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (size_t i = 0; i < params.size(); ++i) {
            double g = grad[i + offset];
            double& mi = m[i];
            double& vi = v[i];
            mi = cfg.beta1 * mi + (1 - cfg.beta1) * g;
            vi = cfg.beta2 * vi + (1 - cfg.beta2) * g * g;
            params[i] -= cfg.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.epsilon);
        }
    }
};

struct SampleRef {
    int shape;
    long index;
};

void shuffle(std::vector<SampleRef>& refs, Rng& rng) {
    for (size_t i = refs.size(); i > 1; --i)
        std::swap(refs[i - 1], refs[rng.below(i)]);
}

}  // namespace

TrainResult train(ToyModel& model, std::span<const LabeledDataset> datasets,
                  const TrainConfig& config) {
    const ArchConfig& arch = model.arch;
    if (datasets.empty()) throw UsageError("train: no datasets");
    if (arch.archetype == Archetype::GridInterp && datasets.size() != 1)
        throw UsageError("GridInterp trains on exactly one dataset");
    if (arch.archetype != Archetype::GridInterp &&
        static_cast<int>(datasets.size()) != arch.n_shapes)
        throw UsageError("train: dataset count must match the model's shape rows");
    for (const auto& ds : datasets)
        if (ds.field.kind != model.field.kind || ds.field.tau_t != model.field.tau_t)
            throw UsageError("train: dataset field kind does not match the model head");
    if (config.batch_size <= 0 || config.epochs < 0 || !(config.learning_rate >= 0))
        throw UsageError("train: bad config");

    std::vector<SampleRef> refs;
    for (size_t s = 0; s < datasets.size(); ++s)
        for (long i = 0; i < datasets[s].size(); ++i)
            if (!datasets[s].has_mask() || datasets[s].mask[i])
                refs.push_back({static_cast<int>(s), i});
    if (refs.empty()) throw UsageError("train: no unmasked samples");

    AdamState adam(model.params.size());
    std::vector<double> grad(model.params.size());
    NetWorkspace ws;
    Rng rng(config.seed, /*stream=*/0xA11CE);
    TrainResult result;
    result.loss_trace.reserve(config.epochs);
    bool is_ad = arch.archetype == Archetype::AutoDecoder;
    const long feat_off = model.feature_offset();

    for (long epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(refs, rng);
        double epoch_loss = 0;
        long batches = 0;
        for (size_t start = 0; start < refs.size(); start += config.batch_size) {
            size_t end = std::min(refs.size(), start + config.batch_size);
            double inv = 1.0 / static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_total = 0;
            for (size_t k = start; k < end; ++k) {
                const auto& ds = datasets[refs[k].shape];
                long i = refs[k].index;
                double raw = forward_raw(model, ds.points[i], refs[k].shape, ws);
                double draw;
                batch_total += pointwise_loss_grad(model.field, raw, ds.values[i], draw);
                backward_sample(model, ws, draw * inv, grad.data(), nullptr, refs[k].shape, true);
                if (is_ad && config.latent_reg > 0) {
                    const double* z =
                        model.params.data() + feat_off +
                        static_cast<long>(refs[k].shape) * arch.feature_dim;
                    double z2 = 0;
                    for (int f = 0; f < arch.feature_dim; ++f) z2 += z[f] * z[f];
                    batch_total += config.latent_reg * z2;
                    double* gz = grad.data() + feat_off +
                                 static_cast<long>(refs[k].shape) * arch.feature_dim;
                    for (int f = 0; f < arch.feature_dim; ++f)
                        gz[f] += inv * 2.0 * config.latent_reg * z[f];
                }
            }
            double batch_loss_mean = batch_total * inv;
            if (!std::isfinite(batch_loss_mean)) throw DataError("train: loss diverged");
            adam.step(model.params, grad, config);
            epoch_loss += batch_loss_mean;
            ++batches;
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

TrainResult train(ToyModel& model, const LabeledDataset& dataset, const TrainConfig& config) {
    return train(model, std::span<const LabeledDataset>(&dataset, 1), config);
}

std::vector<double> fit_latent(const ToyModel& model, const LabeledDataset& dataset,
                               const TrainConfig& config) {
    if (model.arch.archetype != Archetype::AutoDecoder)
        throw UsageError("fit_latent requires an AutoDecoder model");
    if (dataset.field.kind != model.field.kind)
        throw UsageError("fit_latent: dataset field kind does not match the model head");

    int f_dim = model.arch.feature_dim;
    Rng init_rng(config.seed, /*stream=*/0x1A7E);
    std::vector<double> z(f_dim);
    for (double& v : z) v = init_rng.normal() * model.arch.feature_init_sigma;

    std::vector<long> order;
    for (long i = 0; i < dataset.size(); ++i)
        if (!dataset.has_mask() || dataset.mask[i]) order.push_back(i);
    if (order.empty()) throw UsageError("fit_latent: no unmasked samples");

    AdamState adam(f_dim);
    std::vector<double> gz(f_dim), dx(model.arch.input_dim());
    NetWorkspace ws;
    Rng rng(config.seed, /*stream=*/0xF17);

    for (long epoch = 0; epoch < config.latent_iterations; ++epoch) {
        for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            double inv = 1.0 / static_cast<double>(end - start);
            std::fill(gz.begin(), gz.end(), 0.0);
            double total = 0;
            for (size_t k = start; k < end; ++k) {
                long i = order[k];
                double raw = forward_raw(model, dataset.points[i], 0, ws, z.data());
                double draw;
                total += pointwise_loss_grad(model.field, raw, dataset.values[i], draw);
                backward_sample(model, ws, draw * inv, nullptr, dx.data(), 0, false);
                for (int f = 0; f < f_dim; ++f) gz[f] += dx[3 + f];
                if (config.latent_reg > 0)
                    for (int f = 0; f < f_dim; ++f)
                        gz[f] += inv * 2.0 * config.latent_reg * z[f];
            }
            if (!std::isfinite(total)) throw DataError("fit_latent: loss diverged");
            adam.step(z, gz, config);
        }
    }
    return z;
}

ScalarGrid grid_eval(const ToyModel& model, int shape_id, int resolution,
                     const double* external_z) {
    ScalarGrid grid(resolution);
    NetWorkspace ws;
    for (int k = 0; k < resolution; ++k)
        for (int j = 0; j < resolution; ++j)
            for (int i = 0; i < resolution; ++i) {
                Vec3 p = grid.position(i, j, k);
                grid.at(i, j, k) =
                    apply_head(model, forward_raw(model, p, shape_id, ws, external_z));
            }
    return grid;
}

namespace {

json arch_to_json(const ArchConfig& a) {
    return json{{"archetype", to_string(a.archetype)},
                {"feature_dim", a.feature_dim},
                {"hidden", a.hidden},
                {"grid_res", a.grid_res},
                {"n_shapes", a.n_shapes},
                {"activation", a.activation == Activation::Relu ? "relu" : "tanh"},
                {"init_scale", a.init_scale},
                {"feature_init_sigma", a.feature_init_sigma}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    a.archetype = archetype_from_string(j.at("archetype").get<std::string>());
    a.feature_dim = j.at("feature_dim").get<int>();
    a.hidden = j.at("hidden").get<std::vector<int>>();
    a.grid_res = j.at("grid_res").get<int>();
    a.n_shapes = j.at("n_shapes").get<int>();
    a.activation =
        j.at("activation").get<std::string>() == "relu" ? Activation::Relu : Activation::Tanh;
    a.init_scale = j.at("init_scale").get<double>();
    a.feature_init_sigma = j.at("feature_init_sigma").get<double>();
    return a;
}

}  // namespace

uint32_t model_checksum(const ToyModel& model) {
    BlobWriter blob;
    blob.put_doubles(model.params.data(), model.params.size());
    return blob.checksum();
}

void save_model(const ToyModel& model, const std::string& path) {
    BlobWriter blob;
    blob.put_doubles(model.params.data(), model.params.size());

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["type"] = "checkpoint";
    manifest["arch"] = arch_to_json(model.arch);
    manifest["field"] = {{"kind", to_string(model.field.kind)}, {"tau_t", model.field.tau_t}};
    manifest["init_seed"] = model.init_seed;
    manifest["param_count"] = model.params.size();
    std::string blob_name = path.substr(path.find_last_of("/\\") + 1) + ".bin";
    manifest["blob"] = {{"file", blob_name},
                        {"bytes", blob.bytes().size()},
                        {"crc32", crc_hex(blob.checksum())}};
    if (!model.command.empty()) manifest["command"] = model.command;
    if (!model.train_info.empty()) {
        try {
            manifest["train"] = json::parse(model.train_info);
        } catch (const json::exception&) {
            manifest["train"] = model.train_info;
        }
    }
    std::string text = manifest.dump(2);
    write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
    write_file_bytes(path + ".bin", blob.bytes());
}

ToyModel load_model(const std::string& path) {
    auto manifest_bytes = read_file_bytes(path);
    json manifest;
    try {
        manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
    } catch (const json::exception& e) {
        throw DataError(path + ": bad manifest: " + e.what());
    }
    if (manifest.value("type", "") != "checkpoint")
        throw DataError(path + ": not a checkpoint manifest");
    if (manifest.value("format_version", -1) != kFormatVersion)
        throw DataError(path + ": unsupported format version");

    ToyModel m;
    m.arch = arch_from_json(manifest.at("arch"));
    m.field.kind = field_kind_from_string(manifest.at("field").at("kind").get<std::string>());
    m.field.tau_t = manifest.at("field").at("tau_t").get<double>();
    m.init_seed = manifest.at("init_seed").get<uint64_t>();
    if (manifest.contains("command")) m.command = manifest.at("command").get<std::string>();
    if (manifest.contains("train")) m.train_info = manifest.at("train").dump();

    auto blob_bytes = read_file_bytes(path + ".bin");
    if (crc_hex(crc32(blob_bytes)) != manifest.at("blob").at("crc32").get<std::string>())
        throw DataError(path + ": blob checksum mismatch");
    size_t count = manifest.at("param_count").get<size_t>();
    if (blob_bytes.size() != 8 * count) throw DataError(path + ": blob size mismatch");
    if (static_cast<long>(count) != m.arch.param_count())
        throw DataError(path + ": parameter count does not match architecture");
    m.params.resize(count);
    BlobReader reader(std::move(blob_bytes));
    reader.get_doubles(m.params.data(), count);
    for (double v : m.params)
        if (!std::isfinite(v)) throw DataError(path + ": non-finite parameter");
    return m;
}

}  // namespace qsamp
