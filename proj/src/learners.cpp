#include "triage/learners.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage::learn {
namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_inputs(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes) {
  if (x.rows() == 0) throw PreconditionError("cannot fit on zero samples");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw PreconditionError("feature/label count mismatch");
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= classes) throw PreconditionError("class index out of range");
  }
}

class CartBuilder {
 public:
  CartBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
              std::size_t classes, const CartOptions& o, std::uint64_t seed)
      : x_(x), y_(y), w_(w), classes_(classes), o_(o), rng_(seed) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build() {
    std::vector<int> idx;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (w_[i] > 0) idx.push_back(static_cast<int>(i));
    }
    if (idx.empty()) throw PreconditionError("all sample weights are zero");
    node(idx, 0);
    return std::move(tree_);
  }

 private:
  int node(std::vector<int>& idx, std::size_t depth) {
    std::vector<double> dist(classes_, 0.0);
    double total = 0;
    for (int i : idx) {
      dist[static_cast<std::size_t>(y_[static_cast<std::size_t>(i)])] += w_[static_cast<std::size_t>(i)];
      total += w_[static_cast<std::size_t>(i)];
    }
    const int id = static_cast<int>(tree_.size());
    tree_.push_back({});
    auto make_leaf = [&] {
      for (auto& d : dist) d /= total;
      tree_[static_cast<std::size_t>(id)].value = dist;
      return id;
    };
    const bool pure = std::count_if(dist.begin(), dist.end(), [](double d) { return d > 0; }) <= 1;
    if (pure || (o_.max_depth && depth >= o_.max_depth) || idx.size() < 2 * o_.min_samples_leaf) {
      return make_leaf();
    }
    double parent_sq = 0;
    for (double d : dist) parent_sq += d * d;
    const double parent_score = total - parent_sq / total;

    // Candidate features for this split.
    std::size_t n_try = features_.size();
    if (o_.max_features && o_.max_features < n_try) {
      n_try = o_.max_features;
      for (std::size_t i = 0; i < n_try; ++i) {
        std::swap(features_[i], features_[i + rng_.below(features_.size() - i)]);
      }
    }
    double best_score = parent_score - 1e-12;
    int best_feature = -1;
    double best_threshold = 0;
    std::vector<int> order = idx;
    std::vector<double> left(classes_);
    for (std::size_t fi = 0; fi < n_try; ++fi) {
      const int f = features_[fi];
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x_(a, f) < x_(b, f); });
      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0, left_sq = 0;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        const auto i = static_cast<std::size_t>(order[p]);
        const auto c = static_cast<std::size_t>(y_[i]);
        left_sq -= left[c] * left[c];
        left[c] += w_[i];
        left_sq += left[c] * left[c];
        wl += w_[i];
        const double v0 = x_(order[p], f);
        const double v1 = x_(order[p + 1], f);
        if (!(v0 < v1)) continue;
        if (p + 1 < o_.min_samples_leaf || order.size() - (p + 1) < o_.min_samples_leaf) continue;
        const double wr = total - wl;
        double right_sq = 0;
        for (std::size_t k = 0; k < classes_; ++k) {
          const double r = dist[k] - left[k];
          right_sq += r * r;
        }
        const double score = (wl - left_sq / wl) + (wr - right_sq / wr);
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          double thr = 0.5 * (v0 + v1);
          if (!(v0 < thr && thr <= v1)) thr = v1;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf();
    std::vector<int> li, ri;
    for (int i : idx) (x_(i, best_feature) < best_threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = node(li, depth + 1);
    const int r = node(ri, depth + 1);
    auto& n = tree_[static_cast<std::size_t>(id)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = l;
    n.right = r;
    return id;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  const std::vector<double>& w_;
  std::size_t classes_;
  CartOptions o_;
  Rng rng_;
  std::vector<int> features_;
  Tree tree_;
};

std::vector<double> softmax_vec(std::vector<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (auto& v : z) s += (v = std::exp(v - mx));
  for (auto& v : z) v /= s;
  return z;
}

}  // namespace

const TreeNode& leaf_for(const Tree& tree, const Eigen::VectorXd& x) {
  std::size_t i = 0;
  while (tree[i].feature >= 0) {
    i = static_cast<std::size_t>(x(tree[i].feature) < tree[i].threshold ? tree[i].left : tree[i].right);
  }
  return tree[i];
}

Tree fit_cart(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
              std::size_t num_classes, const CartOptions& options, std::uint64_t seed) {
  check_inputs(x, y, num_classes);
  if (w.size() != y.size()) throw PreconditionError("weight count mismatch");
  return CartBuilder(x, y, w, num_classes, options, seed).build();
}

void GradientBoostedTrees::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes) {
  check_inputs(x, y, classes);
  num_classes = classes;
  trees.clear();
  const auto n = static_cast<std::size_t>(x.rows());
  const auto nf = static_cast<std::size_t>(x.cols());

  // Per-feature cut points: midpoints between distinct values, thinned to
  // quantiles when there are more than max_bins.
  std::vector<std::vector<double>> cuts(nf);
  std::vector<std::uint16_t> bins(n * nf);
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    auto& c = cuts[f];
    if (v.size() <= params.max_bins) {
      for (std::size_t i = 1; i < v.size(); ++i) c.push_back(0.5 * (v[i - 1] + v[i]));
    } else {
      for (std::size_t j = 1; j < params.max_bins; ++j) {
        const std::size_t at = j * v.size() / params.max_bins;
        c.push_back(0.5 * (v[at - 1] + v[at]));
      }
      c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double xv = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      bins[i * nf + f] = static_cast<std::uint16_t>(std::upper_bound(c.begin(), c.end(), xv) - c.begin());
    }
  }
  std::size_t max_nb = 1;
  for (const auto& c : cuts) max_nb = std::max(max_nb, c.size() + 1);

  std::vector<double> margin(n * classes, 0.0);
  std::vector<double> g(n), h(n), delta(n);
  std::vector<double> hg(nf * max_nb), hh(nf * max_nb);

  for (std::size_t round = 0; round < params.rounds; ++round) {
    std::vector<double> prob(n * classes);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = softmax_vec({margin.begin() + static_cast<long>(i * classes),
                                  margin.begin() + static_cast<long>((i + 1) * classes)});
      std::copy(p.begin(), p.end(), prob.begin() + static_cast<long>(i * classes));
    }
    for (std::size_t k = 0; k < classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * classes + k];
        g[i] = p - (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0);
        h[i] = std::max(p * (1.0 - p), 1e-16);
      }
      Tree tree;
      std::function<int(std::vector<int>&, std::size_t)> grow = [&](std::vector<int>& idx,
                                                                     std::size_t depth) -> int {
        double gs = 0, hs = 0;
        for (int i : idx) {
          gs += g[static_cast<std::size_t>(i)];
          hs += h[static_cast<std::size_t>(i)];
        }
        const int id = static_cast<int>(tree.size());
        tree.push_back({});
        auto leaf = [&] {
          const double value = -gs / (hs + params.lambda) * params.learning_rate;
          tree[static_cast<std::size_t>(id)].value = {value};
          for (int i : idx) delta[static_cast<std::size_t>(i)] = value;
          return id;
        };
        if (depth >= params.max_depth || hs < 2 * params.min_child_weight) return leaf();
        std::fill(hg.begin(), hg.end(), 0.0);
        std::fill(hh.begin(), hh.end(), 0.0);
        for (int i : idx) {
          const auto si = static_cast<std::size_t>(i);
          const std::uint16_t* row = bins.data() + si * nf;
          for (std::size_t f = 0; f < nf; ++f) {
            hg[f * max_nb + row[f]] += g[si];
            hh[f * max_nb + row[f]] += h[si];
          }
        }
        const double parent = gs * gs / (hs + params.lambda);
        double best_gain = 0;
        int best_f = -1;
        std::size_t best_b = 0;
        for (std::size_t f = 0; f < nf; ++f) {
          double gl = 0, hl = 0;
          for (std::size_t b = 0; b < cuts[f].size(); ++b) {
            gl += hg[f * max_nb + b];
            hl += hh[f * max_nb + b];
            const double gr = gs - gl, hr = hs - hl;
            if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
            const double gain =
                0.5 * (gl * gl / (hl + params.lambda) + gr * gr / (hr + params.lambda) - parent) -
                params.gamma;
            if (gain > best_gain) {
              best_gain = gain;
              best_f = static_cast<int>(f);
              best_b = b;
            }
          }
        }
        if (best_f < 0) return leaf();
        std::vector<int> li, ri;
        for (int i : idx) {
          (bins[static_cast<std::size_t>(i) * nf + static_cast<std::size_t>(best_f)] <= best_b ? li : ri).push_back(i);
        }
        const int l = grow(li, depth + 1);
        const int r = grow(ri, depth + 1);
        auto& node = tree[static_cast<std::size_t>(id)];
        node.feature = best_f;
        node.threshold = cuts[static_cast<std::size_t>(best_f)][best_b];
        node.left = l;
        node.right = r;
        return id;
      };
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      grow(all, 0);
      for (std::size_t i = 0; i < n; ++i) margin[i * classes + k] += delta[i];
      trees.push_back(std::move(tree));
    }
  }
}

std::vector<double> GradientBoostedTrees::predict_proba(const Eigen::VectorXd& x) const {
  std::vector<double> margin(num_classes, 0.0);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    margin[t % num_classes] += leaf_for(trees[t], x).value[0];
  }
  return softmax_vec(margin);
}

void RandomForest::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes) {
  check_inputs(x, y, classes);
  num_classes = classes;
  trees.clear();
  const auto n = static_cast<std::size_t>(x.rows());
  CartOptions o;
  o.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
  o.min_samples_leaf = params.min_samples_leaf;
  Rng rng(params.seed);
  for (std::size_t t = 0; t < params.trees; ++t) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) w[rng.below(n)] += 1.0;
    trees.push_back(fit_cart(x, y, w, classes, o, rng.next()));
  }
}

std::vector<double> RandomForest::predict_proba(const Eigen::VectorXd& x) const {
  std::vector<double> p(num_classes, 0.0);
  for (const auto& t : trees) {
    const auto& v = leaf_for(t, x).value;
    for (std::size_t k = 0; k < num_classes; ++k) p[k] += v[k];
  }
  for (auto& v : p) v /= static_cast<double>(trees.size());
  return p;
}

void AdaBoost::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes) {
  check_inputs(x, y, classes);
  num_classes = classes;
  stumps.clear();
  alphas.clear();
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  CartOptions o;
  o.max_depth = 1;
  const double k = static_cast<double>(classes);
  for (std::size_t m = 0; m < params.estimators; ++m) {
    Tree stump = fit_cart(x, y, w, classes, o, m);
    std::vector<bool> miss(n);
    double err = 0, wsum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto pred = argmax(leaf_for(stump, x.row(static_cast<Eigen::Index>(i)).transpose()).value);
      miss[i] = static_cast<int>(pred) != y[i];
      if (miss[i]) err += w[i];
      wsum += w[i];
    }
    err /= wsum;
    if (err <= 0) {
      stumps.push_back(std::move(stump));
      alphas.push_back(1.0);
      break;
    }
    if (err >= 1.0 - 1.0 / k) {
      if (stumps.empty()) {
        stumps.push_back(std::move(stump));
        alphas.push_back(1.0);
      }
      break;
    }
    const double alpha = params.learning_rate * (std::log((1 - err) / err) + std::log(k - 1));
    stumps.push_back(std::move(stump));
    alphas.push_back(alpha);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      s += w[i];
    }
    for (auto& v : w) v /= s;
  }
}

std::vector<double> AdaBoost::predict_proba(const Eigen::VectorXd& x) const {
  std::vector<double> dec(num_classes, 0.0);
  double total = 0;
  for (std::size_t m = 0; m < stumps.size(); ++m) {
    dec[argmax(leaf_for(stumps[m], x).value)] += alphas[m];
    total += alphas[m];
  }
  const double denom = std::max<double>(1.0, static_cast<double>(num_classes) - 1.0);
  for (auto& d : dec) d = d / total / denom;
  return softmax_vec(dec);
}

void KNearestNeighbors::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes) {
  check_inputs(x, y, classes);
  if (k == 0) throw ConfigError("k must be positive");
  num_classes = classes;
  dim = static_cast<std::size_t>(x.cols());
  points.resize(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) points[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)] = x(i, j);
  }
  labels = y;
}

std::vector<double> KNearestNeighbors::predict_proba(const Eigen::VectorXd& x) const {
  const std::size_t n = labels.size();
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double t = points[i * dim + j] - x(static_cast<Eigen::Index>(j));
      s += t * t;
    }
    d[i] = {s, i};
  }
  const std::size_t kk = std::min(k, n);
  std::partial_sort(d.begin(), d.begin() + static_cast<long>(kk), d.end());
  std::vector<double> p(num_classes, 0.0);
  for (std::size_t i = 0; i < kk; ++i) p[static_cast<std::size_t>(labels[d[i].second])] += 1.0 / static_cast<double>(kk);
  return p;
}

}  // namespace triage::learn
