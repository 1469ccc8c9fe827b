#include "longmatch/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "longmatch/errors.hpp"

namespace longmatch {

namespace detail {

struct LayerCache {
    Tensor x;
    std::vector<Tensor> q, k, v, attn;
    Tensor concat;
    Tensor xhat1, y1;
    Eigen::VectorXd inv_std1;
    Tensor pre, act;
    Tensor xhat2, y2;
    Eigen::VectorXd inv_std2;
    Tensor attn_avg;
    std::vector<std::size_t> keep;  // rows of y2 forwarded to the next layer
};

struct Tape {
    std::vector<std::int32_t> ids;
    std::vector<LayerCache> layers;
    double p = 0.0;
};

}  // namespace detail

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

using Row = Eigen::RowVectorXd;

Tensor uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) t(i, j) = dist(rng);
    return t;
}

void layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Tensor& xhat,
                Eigen::VectorXd& inv_std, Tensor& y) {
    const Eigen::Index n = x.rows();
    const double e = static_cast<double>(x.cols());
    xhat.resize(n, x.cols());
    inv_std.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = x.row(i).sum() / e;
        const Row centered = x.row(i).array() - mu;
        const double var = centered.squaredNorm() / e;
        inv_std(i) = 1.0 / std::sqrt(var + kNormEps);
        xhat.row(i) = centered * inv_std(i);
    }
    y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
}

Tensor layer_norm_backward(const Tensor& dy, const Tensor& xhat, const Eigen::VectorXd& inv_std,
                           const Tensor& gain, Tensor& dgain, Tensor& dbias) {
    dgain.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    dbias.row(0) += dy.colwise().sum();
    const Tensor dxhat = dy.array().rowwise() * gain.row(0).array();
    const double e = static_cast<double>(dy.cols());
    Tensor dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double mean_d = dxhat.row(i).sum() / e;
        const double mean_dx = dxhat.row(i).dot(xhat.row(i)) / e;
        dx.row(i) = inv_std(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx);
    }
    return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

void softmax_rows(Tensor& s) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        s.row(i) /= s.row(i).sum();
    }
}

void run_layer(const Tensor& x, const LayerWeights& w, const ModelConfig& cfg,
               detail::LayerCache& c) {
    const auto heads = cfg.heads;
    const auto hw = static_cast<Eigen::Index>(cfg.head_width());
    const double scale = 1.0 / std::sqrt(static_cast<double>(hw));
    const Eigen::Index n = x.rows();

    c.x = x;
    c.q.resize(heads);
    c.k.resize(heads);
    c.v.resize(heads);
    c.attn.resize(heads);
    c.concat.resize(n, x.cols());
    c.attn_avg = Tensor::Zero(n, n);
    for (std::size_t h = 0; h < heads; ++h) {
        c.q[h].noalias() = x * w.query[h];
        c.k[h].noalias() = x * w.key[h];
        c.v[h].noalias() = x * w.value[h];
        c.attn[h].noalias() = c.q[h] * c.k[h].transpose();
        c.attn[h] *= scale;
        softmax_rows(c.attn[h]);
        c.concat.middleCols(static_cast<Eigen::Index>(h) * hw, hw).noalias() = c.attn[h] * c.v[h];
        c.attn_avg += c.attn[h];
    }
    c.attn_avg /= static_cast<double>(heads);

    Tensor r1 = x;
    r1.noalias() += c.concat * w.output;
    layer_norm(r1, w.norm1_gain, w.norm1_bias, c.xhat1, c.inv_std1, c.y1);

    c.pre.noalias() = c.y1 * w.ff_in;
    c.pre.rowwise() += w.ff_in_bias.row(0);
    c.act = c.pre.unaryExpr([](double v) { return gelu(v); });
    Tensor r2 = c.y1;
    r2.noalias() += c.act * w.ff_out;
    r2.rowwise() += w.ff_out_bias.row(0);
    layer_norm(r2, w.norm2_gain, w.norm2_bias, c.xhat2, c.inv_std2, c.y2);

    if (!c.y2.allFinite()) throw NonFinite("encoder layer output");
}

// Returns d(loss)/d(x) for the layer input.
Tensor layer_backward(const detail::LayerCache& c, const LayerWeights& w, const ModelConfig& cfg,
                      const Tensor& dy2, LayerWeights& g) {
    const auto hw = static_cast<Eigen::Index>(cfg.head_width());
    const double scale = 1.0 / std::sqrt(static_cast<double>(hw));

    const Tensor dr2 = layer_norm_backward(dy2, c.xhat2, c.inv_std2, w.norm2_gain, g.norm2_gain,
                                           g.norm2_bias);
    g.ff_out.noalias() += c.act.transpose() * dr2;
    g.ff_out_bias.row(0) += dr2.colwise().sum();
    Tensor dpre = dr2 * w.ff_out.transpose();
    dpre.array() *= c.pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    g.ff_in.noalias() += c.y1.transpose() * dpre;
    g.ff_in_bias.row(0) += dpre.colwise().sum();
    Tensor dy1 = dr2;
    dy1.noalias() += dpre * w.ff_in.transpose();

    const Tensor dr1 = layer_norm_backward(dy1, c.xhat1, c.inv_std1, w.norm1_gain, g.norm1_gain,
                                           g.norm1_bias);
    g.output.noalias() += c.concat.transpose() * dr1;
    const Tensor dconcat = dr1 * w.output.transpose();
    Tensor dx = dr1;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        const Tensor dhead = dconcat.middleCols(static_cast<Eigen::Index>(h) * hw, hw);
        const Tensor& a = c.attn[h];
        const Tensor da = dhead * c.v[h].transpose();
        const Tensor dv = a.transpose() * dhead;
        Tensor ds = a.array() * (da.array().colwise() - (da.array() * a.array()).rowwise().sum());
        ds *= scale;
        const Tensor dq = ds * c.k[h];
        const Tensor dk = ds.transpose() * c.q[h];
        g.query[h].noalias() += c.x.transpose() * dq;
        g.key[h].noalias() += c.x.transpose() * dk;
        g.value[h].noalias() += c.x.transpose() * dv;
        dx.noalias() += dq * w.query[h].transpose();
        dx.noalias() += dk * w.key[h].transpose();
        dx.noalias() += dv * w.value[h].transpose();
    }
    return dx;
}

std::uint64_t sequence_seed(const std::vector<std::int32_t>& ids, std::size_t layer) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto id : ids) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
        h *= 1099511628211ULL;
    }
    h ^= layer + 1;
    h *= 1099511628211ULL;
    return h;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

TapedForward run_forward(const TokenSequence& seq, const ModelWeights& weights,
                         const ModelConfig& cfg, const ForwardOptions& opts) {
    const std::size_t n = seq.size();
    if (n == 0 || n > cfg.max_len)
        throw ShapeError("sequence length " + std::to_string(n) + " outside [1, " +
                         std::to_string(cfg.max_len) + "]");
    if (seq.protected_mask.size() != n) throw ShapeError("protected mask length mismatch");
    if (weights.layers.size() != cfg.layers) throw ShapeError("weights do not match layer count");

    auto tape = std::make_shared<detail::Tape>();
    tape->ids = seq.ids;
    tape->layers.resize(cfg.layers);

    const auto e = static_cast<Eigen::Index>(cfg.width);
    Tensor x(static_cast<Eigen::Index>(n), e);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = seq.ids[i];
        if (id < 0 || id >= weights.token_embedding.rows())
            throw ShapeError("token id " + std::to_string(id) + " outside the vocabulary");
        x.row(static_cast<Eigen::Index>(i)) =
            weights.token_embedding.row(id) + weights.position_embedding.row(static_cast<Eigen::Index>(i));
    }

    const auto schedule = pruning_schedule(n, cfg.layers, cfg.alpha, seq.protected_count());
    TapedForward out;
    ForwardTrace& trace = out.trace;
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        auto& cache = tape->layers[l];
        run_layer(x, weights.layers[l], cfg, cache);

        LayerTrace lt;
        Eigen::VectorXd r;
        if (opts.strategy.kind == FilterKind::PageRank) {
            auto wi = word_importance(cache.attn_avg, cfg.pagerank);
            r = std::move(wi.r);
            lt.pagerank = std::move(wi.u);
        } else {
            r = importance_by_strategy(
                opts.strategy, LayerSignals{cache.attn_avg, cache.y2, sequence_seed(seq.ids, l)},
                cfg.pagerank);
        }
        if (opts.keep_attention) lt.attention = cache.attn_avg;
        trace.layers.push_back(std::move(lt));
        trace.active.positions.push_back(active);
        trace.active.importance.push_back(r);

        if (l + 1 == cfg.layers) break;
        const auto kept = prune_tokens(active, r, schedule[l + 1], seq.protected_mask);
        cache.keep.clear();
        for (std::size_t i = 0, j = 0; i < active.size() && j < kept.size(); ++i)
            if (active[i] == kept[j]) {
                cache.keep.push_back(i);
                ++j;
            }
        Tensor next(static_cast<Eigen::Index>(kept.size()), e);
        for (std::size_t i = 0; i < cache.keep.size(); ++i)
            next.row(static_cast<Eigen::Index>(i)) = cache.y2.row(static_cast<Eigen::Index>(cache.keep[i]));
        x = std::move(next);
        active = kept;
    }

    const auto& last = tape->layers.back().y2;
    trace.logit = last.row(0).dot(weights.classifier.row(0)) + weights.classifier_bias(0, 0);
    trace.p = sigmoid(trace.logit);
    if (!std::isfinite(trace.logit)) throw NonFinite("classifier logit");
    tape->p = trace.p;

    trace.retention_depth.assign(n, 0);
    for (const auto& layer_positions : trace.active.positions)
        for (auto pos : layer_positions) ++trace.retention_depth[pos];

    out.tape = std::move(tape);
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (heads < 1 || width % heads != 0) throw ConfigError("width must be divisible by heads");
    if (max_len < 3) throw ConfigError("max_len must be >= 3");
    if (ff_width < 1) throw ConfigError("ff_width must be >= 1");
    if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
    pagerank.validate();
}

nlohmann::json to_json(const ModelConfig& cfg) {
    nlohmann::json j = {{"layers", cfg.layers},       {"heads", cfg.heads},
                        {"width", cfg.width},         {"max_len", cfg.max_len},
                        {"ff_width", cfg.ff_width},   {"vocab_size", cfg.vocab_size},
                        {"alpha", cfg.alpha},         {"damping", cfg.pagerank.damping},
                        {"iterations", cfg.pagerank.iterations}, {"init_seed", cfg.init_seed}};
    if (cfg.pagerank.early_stop) j["early_stop"] = *cfg.pagerank.early_stop;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.heads = j.at("heads").get<std::size_t>();
    cfg.width = j.at("width").get<std::size_t>();
    cfg.max_len = j.at("max_len").get<std::size_t>();
    cfg.ff_width = j.at("ff_width").get<std::size_t>();
    cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.pagerank.damping = j.at("damping").get<double>();
    cfg.pagerank.iterations = j.at("iterations").get<std::size_t>();
    cfg.init_seed = j.value("init_seed", std::uint64_t{1});
    if (j.contains("early_stop")) cfg.pagerank.early_stop = j["early_stop"].get<double>();
    cfg.validate();
    return cfg;
}

ModelWeights ModelWeights::zeros(const ModelConfig& cfg) {
    const auto e = static_cast<Eigen::Index>(cfg.width);
    const auto hw = static_cast<Eigen::Index>(cfg.head_width());
    const auto f = static_cast<Eigen::Index>(cfg.ff_width);
    ModelWeights w;
    w.token_embedding = Tensor::Zero(static_cast<Eigen::Index>(cfg.vocab_size), e);
    w.position_embedding = Tensor::Zero(static_cast<Eigen::Index>(cfg.max_len), e);
    w.layers.resize(cfg.layers);
    for (auto& l : w.layers) {
        l.query.assign(cfg.heads, Tensor::Zero(e, hw));
        l.key.assign(cfg.heads, Tensor::Zero(e, hw));
        l.value.assign(cfg.heads, Tensor::Zero(e, hw));
        l.output = Tensor::Zero(e, e);
        l.ff_in = Tensor::Zero(e, f);
        l.ff_in_bias = Tensor::Zero(1, f);
        l.ff_out = Tensor::Zero(f, e);
        l.ff_out_bias = Tensor::Zero(1, e);
        l.norm1_gain = Tensor::Zero(1, e);
        l.norm1_bias = Tensor::Zero(1, e);
        l.norm2_gain = Tensor::Zero(1, e);
        l.norm2_bias = Tensor::Zero(1, e);
    }
    w.classifier = Tensor::Zero(1, e);
    w.classifier_bias = Tensor::Zero(1, 1);
    return w;
}

ModelWeights ModelWeights::initialize(const ModelConfig& cfg) {
    cfg.validate();
    ModelWeights w = zeros(cfg);
    std::mt19937_64 rng(cfg.init_seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.width));
    for (auto& [name, t] : w.named_tensors()) {
        const bool is_gain = name.ends_with("norm1_gain") || name.ends_with("norm2_gain");
        const bool is_bias = name.ends_with("_bias");
        if (is_gain) t->setOnes();
        else if (!is_bias) *t = uniform(t->rows(), t->cols(), bound, rng);
    }
    w.round_to_float();
    return w;
}

std::vector<std::pair<std::string, Tensor*>> ModelWeights::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("token_embedding", &token_embedding);
    out.emplace_back("position_embedding", &position_embedding);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& lw = layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        for (std::size_t h = 0; h < lw.query.size(); ++h) {
            const std::string hp = p + "head" + std::to_string(h) + ".";
            out.emplace_back(hp + "query", &lw.query[h]);
            out.emplace_back(hp + "key", &lw.key[h]);
            out.emplace_back(hp + "value", &lw.value[h]);
        }
        out.emplace_back(p + "output", &lw.output);
        out.emplace_back(p + "ff_in", &lw.ff_in);
        out.emplace_back(p + "ff_in_bias", &lw.ff_in_bias);
        out.emplace_back(p + "ff_out", &lw.ff_out);
        out.emplace_back(p + "ff_out_bias", &lw.ff_out_bias);
        out.emplace_back(p + "norm1_gain", &lw.norm1_gain);
        out.emplace_back(p + "norm1_bias", &lw.norm1_bias);
        out.emplace_back(p + "norm2_gain", &lw.norm2_gain);
        out.emplace_back(p + "norm2_bias", &lw.norm2_bias);
    }
    out.emplace_back("classifier", &classifier);
    out.emplace_back("classifier_bias", &classifier_bias);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelWeights::named_tensors() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (auto& [name, t] : const_cast<ModelWeights*>(this)->named_tensors())
        out.emplace_back(name, t);
    return out;
}

std::size_t ModelWeights::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_tensors()) n += static_cast<std::size_t>(t->size());
    return n;
}

bool ModelWeights::all_finite() const {
    for (const auto& [name, t] : named_tensors())
        if (!t->allFinite()) return false;
    return true;
}

void ModelWeights::round_to_float() {
    for (auto& [name, t] : named_tensors())
        *t = t->unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

std::vector<std::size_t> pruning_schedule(std::size_t n, std::size_t layers, double alpha,
                                          std::size_t protected_count) {
    if (protected_count > n) throw ShapeError("more protected tokens than tokens");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
    std::vector<std::size_t> counts;
    counts.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const double raw = static_cast<double>(n) * std::pow(1.0 - alpha, static_cast<double>(l));
        // The epsilon absorbs representation error such as 400 * 0.9^2 = 323.999...
        const auto kept = static_cast<std::size_t>(std::floor(raw + 1e-9));
        counts.push_back(std::max(protected_count, std::min(kept, n)));
    }
    return counts;
}

LayerOutput attention_layer(const Tensor& hidden, const LayerWeights& weights,
                            const ModelConfig& cfg) {
    if (hidden.rows() < 1 || hidden.cols() != static_cast<Eigen::Index>(cfg.width))
        throw ShapeError("hidden state must be active_n x width with active_n >= 1");
    if (!hidden.allFinite()) throw NonFinite("encoder layer input");
    detail::LayerCache c;
    run_layer(hidden, weights, cfg, c);
    return {std::move(c.y2), std::move(c.attn_avg), std::move(c.attn)};
}

std::vector<std::size_t> prune_tokens(std::span<const std::size_t> active, const Eigen::VectorXd& r,
                                      std::size_t target, const std::vector<bool>& protected_mask) {
    if (static_cast<std::size_t>(r.size()) != active.size())
        throw ShapeError("importance vector does not match the active set");
    std::vector<std::size_t> kept;
    std::vector<std::size_t> candidates;  // local indices of unprotected positions
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (protected_mask.at(active[i])) kept.push_back(active[i]);
        else candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return r(static_cast<Eigen::Index>(a)) > r(static_cast<Eigen::Index>(b));
    });
    for (std::size_t i = 0; i < candidates.size() && kept.size() < target; ++i)
        kept.push_back(active[candidates[i]]);
    std::sort(kept.begin(), kept.end());
    return kept;
}

ForwardTrace forward(const TokenSequence& seq, const ModelWeights& weights, const ModelConfig& cfg,
                     const ForwardOptions& opts) {
    return run_forward(seq, weights, cfg, opts).trace;
}

TapedForward forward_taped(const TokenSequence& seq, const ModelWeights& weights,
                           const ModelConfig& cfg, const ForwardOptions& opts) {
    return run_forward(seq, weights, cfg, opts);
}

void backward(const TapedForward& taped, const ModelWeights& weights, double dlogit,
              ModelWeights& grads) {
    const auto& tape = *taped.tape;
    const std::size_t layers = tape.layers.size();
    ModelConfig cfg;
    cfg.layers = layers;
    cfg.heads = weights.layers.front().query.size();
    cfg.width = static_cast<std::size_t>(weights.classifier.cols());

    const auto& last = tape.layers.back();
    grads.classifier.row(0) += dlogit * last.y2.row(0);
    grads.classifier_bias(0, 0) += dlogit;
    Tensor dy = Tensor::Zero(last.y2.rows(), last.y2.cols());
    dy.row(0) = dlogit * weights.classifier.row(0);

    for (std::size_t l = layers; l-- > 0;) {
        const auto& cache = tape.layers[l];
        Tensor dx = layer_backward(cache, weights.layers[l], cfg, dy, grads.layers[l]);
        if (l == 0) {
            for (Eigen::Index i = 0; i < dx.rows(); ++i) {
                grads.token_embedding.row(tape.ids[static_cast<std::size_t>(i)]) += dx.row(i);
                grads.position_embedding.row(i) += dx.row(i);
            }
            break;
        }
        const auto& prev = tape.layers[l - 1];
        dy = Tensor::Zero(prev.y2.rows(), prev.y2.cols());
        for (std::size_t i = 0; i < prev.keep.size(); ++i)
            dy.row(static_cast<Eigen::Index>(prev.keep[i])) = dx.row(static_cast<Eigen::Index>(i));
    }
}

nlohmann::json trace_to_json(const ForwardTrace& trace, const TokenSequence& seq,
                             const std::vector<std::string>& token_text) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
        const auto& r = trace.active.importance[l];
        nlohmann::json rec = {{"layer", l + 1},
                              {"active", trace.active.positions[l]},
                              {"r", std::vector<double>(r.data(), r.data() + r.size())}};
        if (trace.layers[l].pagerank) {
            const auto& u = trace.layers[l].pagerank->u;
            rec["u"] = std::vector<double>(u.data(), u.data() + u.size());
        }
        layers.push_back(std::move(rec));
    }
    nlohmann::json tokens = nlohmann::json::array();
    for (std::size_t i = 0; i < seq.size(); ++i)
        tokens.push_back({{"position", i},
                          {"id", seq.ids[i]},
                          {"text", i < token_text.size() ? token_text[i] : std::string()},
                          {"protected", static_cast<bool>(seq.protected_mask[i])},
                          {"retention_depth", trace.retention_depth[i]}});
    return {{"p", trace.p}, {"logit", trace.logit}, {"layers", std::move(layers)},
            {"tokens", std::move(tokens)}};
}

}  // namespace longmatch
