#include "mooids/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace mooids {

const char* learner_kind_name(LearnerKind k) {
    return k == LearnerKind::ExactSecondOrder ? "exact_second_order" : "histogram_goss_efb";
}

LearnerKind learner_kind_from_name(const std::string& name) {
    if (name == "exact_second_order") return LearnerKind::ExactSecondOrder;
    if (name == "histogram_goss_efb") return LearnerKind::HistogramGossEfb;
    throw DataError("unknown learner kind: " + name);
}

double Tree::eval(std::span<const double> row) const {
    int idx = 0;
    while (!nodes[std::size_t(idx)].is_leaf) {
        const TreeNode& nd = nodes[std::size_t(idx)];
        idx = row[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[std::size_t(idx)].weight;
}

int Tree::depth() const {
    // nodes are stored with children after parents, so one forward pass works
    std::vector<int> d(nodes.size(), 0);
    int max_d = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf) continue;
        d[std::size_t(nodes[i].left)] = d[i] + 1;
        d[std::size_t(nodes[i].right)] = d[i] + 1;
        max_d = std::max(max_d, d[i] + 1);
    }
    return max_d;
}

double FeatureBundle::encode(std::span<const double> row) const {
    if (passthrough) return row[features[0]];
    double out = 0.0;
    for (std::size_t j = 0; j < features.size(); ++j) {
        double x = row[features[j]];
        if (x == 0.0) continue;
        auto& v = vocab[j];
        std::size_t count = std::size_t(std::upper_bound(v.begin(), v.end(), x) - v.begin());
        out = base[j] + double(count);
    }
    return out;
}

void softmax_gradients(const std::vector<int>& labels, const Matrix& raw_scores,
                       Matrix& g, Matrix& h) {
    std::size_t n = raw_scores.rows(), C = raw_scores.cols();
    if (labels.size() != n) throw DataError("softmax_gradients: label count mismatch");
    g = Matrix(n, C);
    h = Matrix(n, C);
    for (std::size_t r = 0; r < n; ++r) {
        auto s = raw_scores.row(r);
        double mx = *std::max_element(s.begin(), s.end());
        double denom = 0.0;
        for (std::size_t c = 0; c < C; ++c) denom += std::exp(s[c] - mx);
        for (std::size_t c = 0; c < C; ++c) {
            double p = std::exp(s[c] - mx) / denom;
            g.at(r, c) = p - (labels[r] == int(c) ? 1.0 : 0.0);
            h.at(r, c) = p * (1.0 - p);
        }
    }
}

double leaf_weight(double g_sum, double h_sum, double lambda, bool* warned) {
    double denom = h_sum + lambda;
    if (denom <= 0.0) {
        if (warned) *warned = true;
        return 0.0;
    }
    return -g_sum / denom;
}

namespace {

void validate_hyperparams(const Hyperparams& hp) {
    if (!(hp.learning_rate > 0.0) || hp.learning_rate > 1.0) {
        throw ConfigError("learning_rate must be in (0, 1]");
    }
    if (hp.max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (hp.lambda_l2 < 0.0) throw ConfigError("lambda_l2 must be >= 0");
    if (hp.gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (hp.min_child_hessian < 0.0) throw ConfigError("min_child_hessian must be >= 0");
    if (hp.histogram_bins < 2) throw ConfigError("histogram_bins must be >= 2");
    if (hp.goss_a < 0.0 || hp.goss_a >= 1.0) throw ConfigError("goss_a must be in [0, 1)");
    if (!(hp.goss_b > 0.0) || hp.goss_b > 1.0) throw ConfigError("goss_b must be in (0, 1]");
    if (hp.goss_a + hp.goss_b > 1.0) throw ConfigError("goss_a + goss_b must be <= 1");
}

// gain of splitting (G,H) into (GL,HL) and the complement, Eq.-style
// second-order formulation with the gamma growth penalty
double split_gain(double gl, double hl, double g, double h, const Hyperparams& hp) {
    double gr = g - gl;
    double hr = h - hl;
    if (hl < hp.min_child_hessian || hr < hp.min_child_hessian) {
        return -std::numeric_limits<double>::infinity();
    }
    double lam = hp.lambda_l2;
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - g * g / (h + lam)) - hp.gamma;
}

struct BuildNode {
    double g_sum = 0.0;
    double h_sum = 0.0;
    std::size_t count = 0;
    int depth = 0;
};

struct NodeBest {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    int split_bin = -1;  // histogram path
};

void take_if_better(NodeBest& best, double gain, int feature, double threshold, int bin) {
    if (gain > best.gain && gain > 0.0) {
        best.gain = gain;
        best.feature = feature;
        best.threshold = threshold;
        best.split_bin = bin;
    }
}

}  // namespace

std::optional<Split> best_split_exact(const Matrix& rows, const std::vector<double>& g,
                                      const std::vector<double>& h, const Hyperparams& hp) {
    std::size_t n = rows.rows();
    if (n < 2) throw DataError("best_split_exact: need at least 2 rows");
    double g_tot = std::accumulate(g.begin(), g.end(), 0.0);
    double h_tot = std::accumulate(h.begin(), h.end(), 0.0);

    NodeBest best;
    std::vector<std::size_t> order(n);
    for (std::size_t f = 0; f < rows.cols(); ++f) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double va = rows.at(a, f), vb = rows.at(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            std::size_t r = order[i];
            gl += g[r];
            hl += h[r];
            if (rows.at(order[i + 1], f) > rows.at(r, f)) {
                take_if_better(best, split_gain(gl, hl, g_tot, h_tot, hp), int(f),
                               rows.at(r, f), -1);
            }
        }
    }
    if (best.feature < 0) return std::nullopt;
    return Split{std::size_t(best.feature), best.threshold, best.gain};
}

std::optional<Split> best_split_histogram(const Matrix& rows, const std::vector<double>& g,
                                          const std::vector<double>& h,
                                          const std::vector<std::vector<double>>& bin_upper_bounds,
                                          const Hyperparams& hp) {
    std::size_t n = rows.rows();
    if (n < 2) throw DataError("best_split_histogram: need at least 2 rows");
    if (bin_upper_bounds.size() != rows.cols()) {
        throw DataError("best_split_histogram: bin bounds do not match columns");
    }
    double g_tot = std::accumulate(g.begin(), g.end(), 0.0);
    double h_tot = std::accumulate(h.begin(), h.end(), 0.0);

    NodeBest best;
    for (std::size_t f = 0; f < rows.cols(); ++f) {
        const auto& ub = bin_upper_bounds[f];
        std::size_t bins = ub.size();
        std::vector<double> gb(bins, 0.0), hb(bins, 0.0);
        std::vector<std::size_t> cb(bins, 0);
        for (std::size_t r = 0; r < n; ++r) {
            double v = rows.at(r, f);
            std::size_t b = std::size_t(std::lower_bound(ub.begin(), ub.end(), v) - ub.begin());
            if (b >= bins) b = bins - 1;  // values above the top bound go to the last bin
            gb[b] += g[r];
            hb[b] += h[r];
            ++cb[b];
        }
        double gl = 0.0, hl = 0.0;
        std::size_t cnt = 0;
        for (std::size_t b = 0; b + 1 < bins; ++b) {
            gl += gb[b];
            hl += hb[b];
            cnt += cb[b];
            if (cb[b] == 0 || cnt == 0 || cnt == n) continue;
            take_if_better(best, split_gain(gl, hl, g_tot, h_tot, hp), int(f), ub[b], int(b));
        }
    }
    if (best.feature < 0) return std::nullopt;
    return Split{std::size_t(best.feature), best.threshold, best.gain};
}

GossSample goss_sample(const std::vector<double>& g_norms, double a, double b,
                       std::uint64_t seed) {
    if (a < 0.0 || b <= 0.0 || a + b > 1.0) {
        throw ConfigError("goss_sample requires a >= 0, b > 0, a + b <= 1");
    }
    std::size_t n = g_norms.size();
    std::size_t n_top = std::min(n, std::size_t(std::ceil(a * double(n))));
    std::size_t n_rand = std::size_t(std::ceil(b * double(n)));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (g_norms[x] != g_norms[y]) return g_norms[x] > g_norms[y];
        return x < y;
    });

    GossSample out;
    out.indices.assign(order.begin(), order.begin() + std::ptrdiff_t(n_top));
    out.weights.assign(n_top, 1.0);

    std::vector<std::size_t> rest(order.begin() + std::ptrdiff_t(n_top), order.end());
    n_rand = std::min(n_rand, rest.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < n_rand; ++i) {
        std::size_t j = i + rng.index(rest.size() - i);
        std::swap(rest[i], rest[j]);
    }
    double omega = (1.0 - a) / b;
    for (std::size_t i = 0; i < n_rand; ++i) {
        out.indices.push_back(rest[i]);
        out.weights.push_back(omega);
    }
    // ascending row order keeps accumulation deterministic and cache-friendly
    std::vector<std::size_t> perm(out.indices.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
        return out.indices[x] < out.indices[y];
    });
    GossSample sorted;
    sorted.indices.reserve(perm.size());
    sorted.weights.reserve(perm.size());
    for (std::size_t i : perm) {
        sorted.indices.push_back(out.indices[i]);
        sorted.weights.push_back(out.weights[i]);
    }
    return sorted;
}

std::vector<FeatureBundle> efb_bundle(const Matrix& features, std::size_t conflict_max) {
    std::size_t n = features.rows(), f_count = features.cols();
    std::vector<std::vector<std::uint32_t>> nonzero(f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        for (std::size_t r = 0; r < n; ++r) {
            if (features.at(r, f) != 0.0) nonzero[f].push_back(std::uint32_t(r));
        }
    }
    std::vector<std::size_t> order(f_count);
    for (std::size_t f = 0; f < f_count; ++f) order[f] = f;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (nonzero[a].size() != nonzero[b].size()) return nonzero[a].size() > nonzero[b].size();
        return a < b;
    });

    struct Building {
        std::vector<std::size_t> features;
        std::vector<std::uint32_t> occupancy;  // nonzero members per row
        std::size_t conflicts = 0;
    };
    std::vector<Building> building;
    for (std::size_t f : order) {
        bool placed = false;
        for (auto& b : building) {
            std::size_t added = 0;
            for (std::uint32_t r : nonzero[f]) added += b.occupancy[r];
            if (b.conflicts + added <= conflict_max) {
                b.features.push_back(f);
                b.conflicts += added;
                for (std::uint32_t r : nonzero[f]) b.occupancy[r] += 1;
                placed = true;
                break;
            }
        }
        if (!placed) {
            Building b;
            b.features.push_back(f);
            b.occupancy.assign(n, 0);
            for (std::uint32_t r : nonzero[f]) b.occupancy[r] = 1;
            building.push_back(std::move(b));
        }
    }

    std::vector<FeatureBundle> bundles;
    bundles.reserve(building.size());
    for (auto& b : building) {
        FeatureBundle fb;
        fb.features = b.features;
        if (b.features.size() == 1) {
            fb.passthrough = true;
            bundles.push_back(std::move(fb));
            continue;
        }
        double next_base = 1.0;
        for (std::size_t f : b.features) {
            std::vector<double> vals;
            vals.reserve(nonzero[f].size());
            for (std::uint32_t r : nonzero[f]) vals.push_back(features.at(r, f));
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            fb.base.push_back(next_base);
            next_base += double(vals.size()) + 1.0;
            fb.vocab.push_back(std::move(vals));
        }
        bundles.push_back(std::move(fb));
    }
    return bundles;
}

Matrix efb_encode(const std::vector<FeatureBundle>& bundles, const Matrix& rows) {
    Matrix out(rows.rows(), bundles.size());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        auto row = rows.row(r);
        for (std::size_t b = 0; b < bundles.size(); ++b) out.at(r, b) = bundles[b].encode(row);
    }
    return out;
}

Matrix efb_decode(const std::vector<FeatureBundle>& bundles, const Matrix& encoded,
                  std::size_t original_cols) {
    Matrix out(encoded.rows(), original_cols, 0.0);
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        const FeatureBundle& fb = bundles[b];
        if (fb.passthrough) {
            for (std::size_t r = 0; r < encoded.rows(); ++r) {
                out.at(r, fb.features[0]) = encoded.at(r, b);
            }
            continue;
        }
        for (std::size_t r = 0; r < encoded.rows(); ++r) {
            double v = encoded.at(r, b);
            if (v == 0.0) continue;
            std::size_t j = fb.features.size() - 1;
            while (j > 0 && fb.base[j] > v) --j;
            std::size_t k = std::size_t(v - fb.base[j]);
            double x = k >= 1 ? fb.vocab[j][k - 1] : fb.vocab[j].front();
            out.at(r, fb.features[j]) = x;
        }
    }
    return out;
}

std::vector<double> quantile_bin_upper_bounds(const std::vector<double>& col, int bins) {
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() <= std::size_t(bins)) return distinct;

    std::vector<double> ub;
    std::size_t n = sorted.size();
    for (int b = 1; b < bins; ++b) {
        std::size_t rank = std::size_t(b) * n / std::size_t(bins);
        if (rank == 0) continue;
        double v = sorted[rank - 1];
        if (ub.empty() || v > ub.back()) ub.push_back(v);
    }
    if (ub.empty() || ub.back() < sorted.back()) ub.push_back(sorted.back());
    return ub;
}

namespace {

constexpr double kLogEps = 1e-15;

double multiclass_logloss(const std::vector<int>& labels, const Matrix& scores) {
    double loss = 0.0;
    std::size_t n = scores.rows(), C = scores.cols();
    for (std::size_t r = 0; r < n; ++r) {
        auto s = scores.row(r);
        double mx = *std::max_element(s.begin(), s.end());
        double denom = 0.0;
        for (std::size_t c = 0; c < C; ++c) denom += std::exp(s[c] - mx);
        double p = std::exp(s[std::size_t(labels[r])] - mx) / denom;
        loss -= std::log(std::max(p, kLogEps));
    }
    return loss / double(n);
}

// Depth-first exact grower. Each node carries per-feature row lists kept in
// sorted feature order; splits partition the lists without re-sorting.
Tree grow_exact(const Matrix& cols, const std::vector<std::vector<std::uint32_t>>& sorted_idx,
                const double* g, const double* h, const Hyperparams& hp, bool* leaf_warned) {
    std::size_t f_count = cols.cols();
    Tree tree;

    struct Pending {
        int node = 0;
        int depth = 0;
        std::vector<std::vector<std::uint32_t>> sorted;  // per feature
        double g_sum = 0.0, h_sum = 0.0;
    };

    Pending root;
    root.sorted = sorted_idx;
    for (std::size_t r = 0; r < cols.rows(); ++r) {
        root.g_sum += g[r];
        root.h_sum += h[r];
    }
    tree.nodes.emplace_back();

    std::vector<Pending> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
        Pending nd = std::move(stack.back());
        stack.pop_back();
        std::size_t count = nd.sorted[0].size();

        NodeBest best;
        if (nd.depth < hp.max_depth && count >= 2) {
            std::vector<NodeBest> per_feature(f_count);
            parallel_for(0, f_count, [&](std::size_t f) {
                const auto& rows = nd.sorted[f];
                double gl = 0.0, hl = 0.0;
                for (std::size_t i = 0; i + 1 < count; ++i) {
                    std::uint32_t r = rows[i];
                    gl += g[r];
                    hl += h[r];
                    if (cols.at(rows[i + 1], f) > cols.at(r, f)) {
                        take_if_better(per_feature[f],
                                       split_gain(gl, hl, nd.g_sum, nd.h_sum, hp), int(f),
                                       cols.at(r, f), -1);
                    }
                }
            });
            for (std::size_t f = 0; f < f_count; ++f) {
                const NodeBest& cand = per_feature[f];
                if (cand.feature >= 0) {
                    take_if_better(best, cand.gain, cand.feature, cand.threshold, -1);
                }
            }
        }

        if (best.feature < 0) {
            tree.nodes[std::size_t(nd.node)].is_leaf = true;
            tree.nodes[std::size_t(nd.node)].weight =
                leaf_weight(nd.g_sum, nd.h_sum, hp.lambda_l2, leaf_warned);
            continue;
        }

        Pending left, right;
        left.depth = right.depth = nd.depth + 1;
        left.sorted.resize(f_count);
        right.sorted.resize(f_count);
        std::size_t bf = std::size_t(best.feature);
        for (std::size_t f = 0; f < f_count; ++f) {
            for (std::uint32_t r : nd.sorted[f]) {
                if (cols.at(r, bf) <= best.threshold) {
                    left.sorted[f].push_back(r);
                } else {
                    right.sorted[f].push_back(r);
                }
            }
        }
        for (std::uint32_t r : left.sorted[0]) {
            left.g_sum += g[r];
            left.h_sum += h[r];
        }
        right.g_sum = nd.g_sum - left.g_sum;
        right.h_sum = nd.h_sum - left.h_sum;

        TreeNode& parent = tree.nodes[std::size_t(nd.node)];
        parent.is_leaf = false;
        parent.feature = best.feature;
        parent.threshold = best.threshold;
        parent.left = int(tree.nodes.size());
        parent.right = int(tree.nodes.size()) + 1;
        left.node = parent.left;
        right.node = parent.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return tree;
}

// Depth-first histogram grower over pre-binned columns; only sampled rows
// carry statistics and a single histogram buffer is reused per node.
Tree grow_histogram(const std::vector<std::vector<double>>& bin_ub,
                    const std::vector<std::uint32_t>& bin_idx, std::size_t f_count,
                    const GossSample& sample, const std::vector<double>& g,
                    const std::vector<double>& h, const Hyperparams& hp, bool* leaf_warned) {
    Tree tree;
    tree.nodes.emplace_back();
    std::size_t n_sample = sample.indices.size();

    std::vector<double> gw(n_sample), hw(n_sample);
    for (std::size_t i = 0; i < n_sample; ++i) {
        gw[i] = g[sample.indices[i]] * sample.weights[i];
        hw[i] = h[sample.indices[i]] * sample.weights[i];
    }

    struct Pending {
        int node = 0;
        int depth = 0;
        std::vector<std::uint32_t> rows;  // indices into the sample arrays
        double g_sum = 0.0, h_sum = 0.0;
    };

    struct BinStat {
        double g = 0.0, h = 0.0;
        std::size_t count = 0;
    };
    std::vector<std::size_t> col_offset(f_count + 1, 0);
    for (std::size_t f = 0; f < f_count; ++f) {
        col_offset[f + 1] = col_offset[f] + bin_ub[f].size();
    }
    std::vector<BinStat> hist(col_offset.back());

    Pending root;
    root.rows.resize(n_sample);
    for (std::size_t i = 0; i < n_sample; ++i) {
        root.rows[i] = std::uint32_t(i);
        root.g_sum += gw[i];
        root.h_sum += hw[i];
    }

    std::vector<Pending> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
        Pending nd = std::move(stack.back());
        stack.pop_back();
        std::size_t count = nd.rows.size();

        NodeBest best;
        if (nd.depth < hp.max_depth && count >= 2) {
            std::fill(hist.begin(), hist.end(), BinStat{});
            for (std::uint32_t i : nd.rows) {
                std::size_t row = sample.indices[i];
                const std::uint32_t* bins = &bin_idx[row * f_count];
                for (std::size_t f = 0; f < f_count; ++f) {
                    BinStat& st = hist[col_offset[f] + bins[f]];
                    st.g += gw[i];
                    st.h += hw[i];
                    st.count += 1;
                }
            }
            for (std::size_t f = 0; f < f_count; ++f) {
                const BinStat* bins = &hist[col_offset[f]];
                std::size_t n_bins = bin_ub[f].size();
                double gl = 0.0, hl = 0.0;
                std::size_t cnt = 0;
                for (std::size_t b = 0; b + 1 < n_bins; ++b) {
                    gl += bins[b].g;
                    hl += bins[b].h;
                    cnt += bins[b].count;
                    if (bins[b].count == 0 || cnt == 0 || cnt == count) continue;
                    take_if_better(best, split_gain(gl, hl, nd.g_sum, nd.h_sum, hp), int(f),
                                   bin_ub[f][b], int(b));
                }
            }
        }

        if (best.feature < 0) {
            tree.nodes[std::size_t(nd.node)].is_leaf = true;
            tree.nodes[std::size_t(nd.node)].weight =
                leaf_weight(nd.g_sum, nd.h_sum, hp.lambda_l2, leaf_warned);
            continue;
        }

        Pending left, right;
        left.depth = right.depth = nd.depth + 1;
        std::size_t bf = std::size_t(best.feature);
        for (std::uint32_t i : nd.rows) {
            std::size_t row = sample.indices[i];
            if (int(bin_idx[row * f_count + bf]) <= best.split_bin) {
                left.rows.push_back(i);
                left.g_sum += gw[i];
                left.h_sum += hw[i];
            } else {
                right.rows.push_back(i);
            }
        }
        right.g_sum = nd.g_sum - left.g_sum;
        right.h_sum = nd.h_sum - left.h_sum;

        TreeNode& parent = tree.nodes[std::size_t(nd.node)];
        parent.is_leaf = false;
        parent.feature = best.feature;
        parent.threshold = best.threshold;
        parent.left = int(tree.nodes.size());
        parent.right = int(tree.nodes.size()) + 1;
        left.node = parent.left;
        right.node = parent.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return tree;
}

}  // namespace

GbdtModel train(const DataTable& table, const Hyperparams& hp, LearnerKind kind,
                std::uint64_t seed, TrainLog* log) {
    validate_hyperparams(hp);
    if (table.n_rows() < 2) throw DataError("train: need at least 2 rows");
    if (table.n_classes() < 2) throw DataError("train: degenerate single-class input");

    std::size_t n = table.n_rows();
    std::size_t C = table.n_classes();
    const std::vector<int>& y = table.labels();

    GbdtModel model;
    model.kind = kind;
    model.class_count = C;
    model.hp = hp;
    model.feature_names = table.feature_names();
    model.label_names = table.label_names();

    std::vector<std::size_t> class_counts(C, 0);
    for (int lab : y) ++class_counts[std::size_t(lab)];
    model.base_score.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        model.base_score[c] = std::log(double(class_counts[c]) / double(n));
    }

    // learner-specific training views
    Matrix enc;  // histogram kind: bundled columns
    const Matrix* cols = &table.features();
    std::vector<std::vector<std::uint32_t>> sorted_idx;
    std::vector<std::vector<double>> bin_ub;
    std::vector<std::uint32_t> bin_idx;
    std::size_t f_count = table.n_features();

    if (kind == LearnerKind::ExactSecondOrder) {
        sorted_idx.resize(f_count);
        parallel_for(0, f_count, [&](std::size_t f) {
            auto& idx = sorted_idx[f];
            idx.resize(n);
            for (std::size_t r = 0; r < n; ++r) idx[r] = std::uint32_t(r);
            std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
                double va = cols->at(a, f), vb = cols->at(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });
        });
    } else {
        model.bundles = efb_bundle(table.features(), hp.efb_conflict_max);
        enc = efb_encode(model.bundles, table.features());
        cols = &enc;
        f_count = enc.cols();
        bin_ub.resize(f_count);
        for (std::size_t f = 0; f < f_count; ++f) {
            bin_ub[f] = quantile_bin_upper_bounds(enc.column(f), hp.histogram_bins);
        }
        bin_idx.resize(n * f_count);
        parallel_for(0, n, [&](std::size_t r) {
            for (std::size_t f = 0; f < f_count; ++f) {
                const auto& ub = bin_ub[f];
                double v = enc.at(r, f);
                std::size_t b =
                    std::size_t(std::lower_bound(ub.begin(), ub.end(), v) - ub.begin());
                if (b >= ub.size()) b = ub.size() - 1;
                bin_idx[r * f_count + f] = std::uint32_t(b);
            }
        });
    }

    Matrix scores(n, C);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < C; ++c) scores.at(r, c) = model.base_score[c];
    }
    if (log) {
        log->round_train_loss.clear();
        log->round_train_loss.push_back(multiclass_logloss(y, scores));
    }

    bool leaf_warned = false;
    Matrix g, h;
    std::vector<double> g_col(n), h_col(n);
    for (std::size_t round = 0; round < hp.n_estimators; ++round) {
        softmax_gradients(y, scores, g, h);

        GossSample sample;
        if (kind == LearnerKind::HistogramGossEfb) {
            std::vector<double> g_norm(n, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < C; ++c) s += g.at(r, c) * g.at(r, c);
                g_norm[r] = std::sqrt(s);
            }
            sample = goss_sample(g_norm, hp.goss_a, hp.goss_b, derive_seed(seed, round));
        }

        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t r = 0; r < n; ++r) {
                g_col[r] = g.at(r, c);
                h_col[r] = h.at(r, c);
            }
            Tree tree;
            if (kind == LearnerKind::ExactSecondOrder) {
                tree = grow_exact(*cols, sorted_idx, g_col.data(), h_col.data(), hp,
                                  &leaf_warned);
            } else {
                tree = grow_histogram(bin_ub, bin_idx, f_count, sample, g_col, h_col, hp,
                                      &leaf_warned);
            }
            for (std::size_t r = 0; r < n; ++r) {
                scores.at(r, c) += hp.learning_rate * tree.eval(cols->row(r));
            }
            model.trees.push_back(std::move(tree));
        }
        if (log) log->round_train_loss.push_back(multiclass_logloss(y, scores));
    }
    if (leaf_warned) {
        model.warnings.push_back("leaf with zero curvature encountered; weight forced to 0");
    }
    return model;
}

Matrix GbdtModel::raw_scores(const Matrix& rows) const {
    if (rows.cols() != feature_names.size()) {
        throw DataError("predict: feature count mismatch (expected " +
                        std::to_string(feature_names.size()) + ", got " +
                        std::to_string(rows.cols()) + ")");
    }
    Matrix view;
    const Matrix* cols = &rows;
    if (kind == LearnerKind::HistogramGossEfb) {
        view = efb_encode(bundles, rows);
        cols = &view;
    }
    std::size_t n = rows.rows();
    Matrix scores(n, class_count);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < class_count; ++c) scores.at(r, c) = base_score[c];
    }
    std::size_t rounds = trees.size() / class_count;
    for (std::size_t t = 0; t < rounds; ++t) {
        for (std::size_t c = 0; c < class_count; ++c) {
            const Tree& tree = trees[t * class_count + c];
            for (std::size_t r = 0; r < n; ++r) {
                scores.at(r, c) += hp.learning_rate * tree.eval(cols->row(r));
            }
        }
    }
    return scores;
}

Matrix GbdtModel::predict_proba(const Matrix& rows) const {
    Matrix scores = raw_scores(rows);
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        auto s = scores.row(r);
        double mx = *std::max_element(s.begin(), s.end());
        double denom = 0.0;
        for (auto& v : s) {
            v = std::exp(v - mx);
            denom += v;
        }
        for (auto& v : s) v /= denom;
    }
    return scores;
}

std::vector<int> GbdtModel::predict_labels(const Matrix& rows) const {
    Matrix scores = raw_scores(rows);
    std::vector<int> out(scores.rows());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        auto s = scores.row(r);
        out[r] = int(std::max_element(s.begin(), s.end()) - s.begin());
    }
    return out;
}

std::size_t GbdtModel::count_node_visits(const Matrix& rows) const {
    Matrix view;
    const Matrix* cols = &rows;
    if (kind == LearnerKind::HistogramGossEfb) {
        view = efb_encode(bundles, rows);
        cols = &view;
    }
    std::size_t visits = 0;
    for (std::size_t r = 0; r < cols->rows(); ++r) {
        auto row = cols->row(r);
        for (const Tree& tree : trees) {
            int idx = 0;
            ++visits;
            while (!tree.nodes[std::size_t(idx)].is_leaf) {
                const TreeNode& nd = tree.nodes[std::size_t(idx)];
                idx = row[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
                ++visits;
            }
        }
    }
    return visits;
}

namespace {

using nlohmann::json;

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const TreeNode& nd : tree.nodes) {
        if (nd.is_leaf) {
            nodes.push_back({{"w", nd.weight}});
        } else {
            nodes.push_back({{"f", nd.feature}, {"t", nd.threshold}, {"l", nd.left}, {"r", nd.right}});
        }
    }
    return nodes;
}

Tree tree_from_json(const json& nodes) {
    Tree tree;
    for (const auto& nj : nodes) {
        TreeNode nd;
        if (nj.contains("w")) {
            nd.is_leaf = true;
            nd.weight = nj.at("w").get<double>();
        } else {
            nd.is_leaf = false;
            nd.feature = nj.at("f").get<int>();
            nd.threshold = nj.at("t").get<double>();
            nd.left = nj.at("l").get<int>();
            nd.right = nj.at("r").get<int>();
        }
        tree.nodes.push_back(nd);
    }
    return tree;
}

}  // namespace

std::string serialize(const GbdtModel& model) {
    json doc;
    doc["format"] = "mooids-gbdt-v1";
    doc["kind"] = learner_kind_name(model.kind);
    doc["class_count"] = model.class_count;
    doc["base_score"] = model.base_score;
    doc["hyperparams"] = {{"n_estimators", model.hp.n_estimators},
                          {"learning_rate", model.hp.learning_rate},
                          {"max_depth", model.hp.max_depth},
                          {"lambda_l2", model.hp.lambda_l2},
                          {"gamma", model.hp.gamma},
                          {"min_child_hessian", model.hp.min_child_hessian},
                          {"goss_a", model.hp.goss_a},
                          {"goss_b", model.hp.goss_b},
                          {"histogram_bins", model.hp.histogram_bins},
                          {"efb_conflict_max", model.hp.efb_conflict_max}};
    doc["feature_names"] = model.feature_names;
    doc["label_names"] = model.label_names;
    json bundles = json::array();
    for (const FeatureBundle& fb : model.bundles) {
        bundles.push_back({{"features", fb.features},
                           {"passthrough", fb.passthrough},
                           {"vocab", fb.vocab},
                           {"base", fb.base}});
    }
    doc["bundles"] = bundles;
    json trees = json::array();
    for (const Tree& tree : model.trees) trees.push_back(tree_to_json(tree));
    doc["trees"] = trees;
    doc["warnings"] = model.warnings;
    return doc.dump();
}

GbdtModel deserialize(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "mooids-gbdt-v1") {
            throw DataError("unsupported model format tag");
        }
        GbdtModel model;
        model.kind = learner_kind_from_name(doc.at("kind").get<std::string>());
        model.class_count = doc.at("class_count").get<std::size_t>();
        model.base_score = doc.at("base_score").get<std::vector<double>>();
        const json& hp = doc.at("hyperparams");
        model.hp.n_estimators = hp.at("n_estimators").get<std::size_t>();
        model.hp.learning_rate = hp.at("learning_rate").get<double>();
        model.hp.max_depth = hp.at("max_depth").get<int>();
        model.hp.lambda_l2 = hp.at("lambda_l2").get<double>();
        model.hp.gamma = hp.at("gamma").get<double>();
        model.hp.min_child_hessian = hp.at("min_child_hessian").get<double>();
        model.hp.goss_a = hp.at("goss_a").get<double>();
        model.hp.goss_b = hp.at("goss_b").get<double>();
        model.hp.histogram_bins = hp.at("histogram_bins").get<int>();
        model.hp.efb_conflict_max = hp.at("efb_conflict_max").get<std::size_t>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.label_names = doc.at("label_names").get<std::vector<std::string>>();
        for (const auto& bj : doc.at("bundles")) {
            FeatureBundle fb;
            fb.features = bj.at("features").get<std::vector<std::size_t>>();
            fb.passthrough = bj.at("passthrough").get<bool>();
            fb.vocab = bj.at("vocab").get<std::vector<std::vector<double>>>();
            fb.base = bj.at("base").get<std::vector<double>>();
            model.bundles.push_back(std::move(fb));
        }
        for (const auto& tj : doc.at("trees")) model.trees.push_back(tree_from_json(tj));
        model.warnings = doc.at("warnings").get<std::vector<std::string>>();
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace mooids
