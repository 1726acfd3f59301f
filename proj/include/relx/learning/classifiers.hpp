#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relx/corpus/types.hpp"
#include "relx/error.hpp"
#include "relx/util.hpp"

namespace relx {

enum class ClassifierKind { kNaiveBayes, kKnn, kLinearSvm };

inline std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kNaiveBayes: return "naive_bayes";
    case ClassifierKind::kKnn: return "knn";
    case ClassifierKind::kLinearSvm: return "linear_svm";
  }
  return "";
}

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "naive_bayes" || s == "nb") return ClassifierKind::kNaiveBayes;
  if (s == "knn") return ClassifierKind::kKnn;
  if (s == "linear_svm" || s == "svm") return ClassifierKind::kLinearSvm;
  throw Error(ErrorKind::kConfig, "unknown classifier kind '" + s + "'");
}

using Matrix = std::vector<std::vector<double>>;

inline std::string dataset_fingerprint(const Matrix& x, const std::vector<RelationType>& y) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& row : x)
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double)), h);
  for (RelationType t : y) h = fnv1a(to_string(t), h);
  return hex64(h);
}

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::kNaiveBayes;
  std::vector<RelationType> classes;  // ascending
  std::size_t dimension = 0;
  std::uint64_t seed = 0;
  std::string trained_on;
  nlohmann::json hyper = nlohmann::json::object();

  // naive_bayes
  std::vector<double> log_prior;
  Matrix means, variances;
  // knn
  int k = 5;
  Matrix train_x;
  std::vector<int> train_y;  // class indexes
  // linear_svm (on standardized inputs)
  std::vector<double> center, scale;
  Matrix weights;
  std::vector<double> bias;

  std::size_t class_index(RelationType t) const {
    auto it = std::find(classes.begin(), classes.end(), t);
    if (it == classes.end()) throw Error(ErrorKind::kUnknownLabel, "class '" + std::string(to_string(t)) + "' not in model");
    return static_cast<std::size_t>(it - classes.begin());
  }
};

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (double& v : p) v /= s;
  return p;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

// Hyperparameters (all optional): naive_bayes {var_smoothing}, knn {k},
// linear_svm {epochs, learning_rate, l2}.
inline ClassifierModel train_classifier(ClassifierKind kind, const Matrix& x, const std::vector<RelationType>& y,
                                        const nlohmann::json& hyper = nlohmann::json::object(), std::uint64_t seed = 42) {
  if (x.size() != y.size()) throw Error(ErrorKind::kDimension, "feature and label counts differ");
  if (x.empty()) throw Error(ErrorKind::kDegenerateTraining, "no training examples");
  std::set<RelationType> cls(y.begin(), y.end());
  if (cls.size() < 2) throw Error(ErrorKind::kDegenerateTraining, "training data has a single class");
  const std::size_t d = x.front().size();
  for (const auto& row : x)
    if (row.size() != d) throw Error(ErrorKind::kDimension, "inconsistent feature dimension");

  ClassifierModel m;
  m.kind = kind;
  m.classes.assign(cls.begin(), cls.end());
  m.dimension = d;
  m.seed = seed;
  m.hyper = hyper;
  m.trained_on = dataset_fingerprint(x, y);
  const std::size_t c = m.classes.size(), n = x.size();
  std::vector<int> yi(n);
  for (std::size_t i = 0; i < n; ++i) yi[i] = static_cast<int>(m.class_index(y[i]));

  switch (kind) {
    case ClassifierKind::kNaiveBayes: {
      double smoothing = hyper.value("var_smoothing", 1e-9);
      m.means.assign(c, std::vector<double>(d, 0.0));
      m.variances.assign(c, std::vector<double>(d, 0.0));
      std::vector<double> count(c, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        count[static_cast<std::size_t>(yi[i])] += 1;
        for (std::size_t f = 0; f < d; ++f) m.means[static_cast<std::size_t>(yi[i])][f] += x[i][f];
      }
      for (std::size_t k = 0; k < c; ++k)
        for (double& v : m.means[k]) v /= count[k];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < d; ++f) {
          double diff = x[i][f] - m.means[static_cast<std::size_t>(yi[i])][f];
          m.variances[static_cast<std::size_t>(yi[i])][f] += diff * diff;
        }
      double max_var = 0;
      for (std::size_t f = 0; f < d; ++f) {
        double mean = 0, var = 0;
        for (const auto& row : x) mean += row[f];
        mean /= static_cast<double>(n);
        for (const auto& row : x) var += (row[f] - mean) * (row[f] - mean);
        max_var = std::max(max_var, var / static_cast<double>(n));
      }
      double eps = smoothing * std::max(max_var, 1.0);
      for (std::size_t k = 0; k < c; ++k)
        for (double& v : m.variances[k]) v = v / count[k] + eps;
      for (std::size_t k = 0; k < c; ++k) m.log_prior.push_back(std::log(count[k] / static_cast<double>(n)));
      break;
    }
    case ClassifierKind::kKnn: {
      m.k = hyper.value("k", 5);
      if (m.k < 1) throw Error(ErrorKind::kConfig, "knn k must be >= 1");
      m.train_x = x;
      m.train_y = yi;
      break;
    }
    case ClassifierKind::kLinearSvm: {
      int epochs = hyper.value("epochs", 50);
      double lr = hyper.value("learning_rate", 0.01);
      double l2 = hyper.value("l2", 1e-4);
      m.center.assign(d, 0.0);
      m.scale.assign(d, 0.0);
      for (const auto& row : x)
        for (std::size_t f = 0; f < d; ++f) m.center[f] += row[f];
      for (double& v : m.center) v /= static_cast<double>(n);
      for (const auto& row : x)
        for (std::size_t f = 0; f < d; ++f) m.scale[f] += (row[f] - m.center[f]) * (row[f] - m.center[f]);
      for (double& v : m.scale) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v == 0) v = 1;
      }
      Matrix z(n, std::vector<double>(d));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < d; ++f) z[i][f] = (x[i][f] - m.center[f]) / m.scale[f];
      m.weights.assign(c, std::vector<double>(d, 0.0));
      m.bias.assign(c, 0.0);
      std::mt19937_64 rng(seed);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      for (int e = 0; e < epochs; ++e) {
        for (std::size_t i = n - 1; i > 0; --i) {
          std::uniform_int_distribution<std::size_t> pick(0, i);
          std::swap(order[i], order[pick(rng)]);
        }
        for (std::size_t idx : order) {
          for (std::size_t k = 0; k < c; ++k) {
            double target = yi[idx] == static_cast<int>(k) ? 1.0 : -1.0;
            auto& w = m.weights[k];
            double margin = m.bias[k];
            for (std::size_t f = 0; f < d; ++f) margin += w[f] * z[idx][f];
            for (std::size_t f = 0; f < d; ++f) w[f] -= lr * l2 * w[f];
            if (target * margin < 1.0) {
              for (std::size_t f = 0; f < d; ++f) w[f] += lr * target * z[idx][f];
              m.bias[k] += lr * target;
            }
          }
        }
      }
      break;
    }
  }
  return m;
}

inline std::vector<double> decision_scores(const ClassifierModel& m, const std::vector<double>& x) {
  std::vector<double> s(m.classes.size(), 0.0);
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    s[k] = m.bias[k];
    for (std::size_t f = 0; f < m.dimension; ++f) s[k] += m.weights[k][f] * (x[f] - m.center[f]) / m.scale[f];
  }
  return s;
}

// Class probabilities aligned with m.classes, summing to 1.
inline std::vector<double> predict_proba(const ClassifierModel& m, const std::vector<double>& x) {
  if (x.size() != m.dimension)
    throw Error(ErrorKind::kDimension, "expected " + std::to_string(m.dimension) + " features, got " + std::to_string(x.size()));
  const std::size_t c = m.classes.size();
  switch (m.kind) {
    case ClassifierKind::kNaiveBayes: {
      std::vector<double> ll(c);
      for (std::size_t k = 0; k < c; ++k) {
        double s = m.log_prior[k];
        for (std::size_t f = 0; f < m.dimension; ++f) {
          double var = m.variances[k][f], diff = x[f] - m.means[k][f];
          s += -0.5 * std::log(2 * M_PI * var) - diff * diff / (2 * var);
        }
        ll[k] = s;
      }
      return detail::softmax(ll);
    }
    case ClassifierKind::kKnn: {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(m.train_x.size());
      for (std::size_t i = 0; i < m.train_x.size(); ++i) dist.push_back({detail::sq_dist(x, m.train_x[i]), i});
      std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), dist.size());
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      std::vector<double> p(c, 0.0);
      for (std::size_t i = 0; i < k; ++i) p[static_cast<std::size_t>(m.train_y[dist[i].second])] += 1.0 / static_cast<double>(k);
      return p;
    }
    case ClassifierKind::kLinearSvm: return detail::softmax(decision_scores(m, x));
  }
  return {};
}

// Most probable class; ties go to the earlier class.
inline RelationType predict(const ClassifierModel& m, const std::vector<double>& x) {
  auto p = predict_proba(m, x);
  return m.classes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

inline nlohmann::json classifier_to_json(const ClassifierModel& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  std::vector<std::string> cls;
  for (auto c : m.classes) cls.emplace_back(to_string(c));
  j["classes"] = cls;
  j["dimension"] = m.dimension;
  j["seed"] = m.seed;
  j["trained_on"] = m.trained_on;
  j["hyper"] = m.hyper;
  nlohmann::json p;
  switch (m.kind) {
    case ClassifierKind::kNaiveBayes: p = {{"log_prior", m.log_prior}, {"means", m.means}, {"variances", m.variances}}; break;
    case ClassifierKind::kKnn: p = {{"k", m.k}, {"train_x", m.train_x}, {"train_y", m.train_y}}; break;
    case ClassifierKind::kLinearSvm:
      p = {{"center", m.center}, {"scale", m.scale}, {"weights", m.weights}, {"bias", m.bias}};
      break;
  }
  j["parameters"] = p;
  return j;
}

inline ClassifierModel classifier_from_json(const nlohmann::json& j) {
  ClassifierModel m;
  try {
    m.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    for (const auto& c : j.at("classes")) m.classes.push_back(relation_type_from(c.get<std::string>()));
    m.dimension = j.at("dimension").get<std::size_t>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.trained_on = j.value("trained_on", std::string());
    m.hyper = j.value("hyper", nlohmann::json::object());
    const auto& p = j.at("parameters");
    switch (m.kind) {
      case ClassifierKind::kNaiveBayes:
        p.at("log_prior").get_to(m.log_prior);
        p.at("means").get_to(m.means);
        p.at("variances").get_to(m.variances);
        break;
      case ClassifierKind::kKnn:
        m.k = p.at("k").get<int>();
        p.at("train_x").get_to(m.train_x);
        p.at("train_y").get_to(m.train_y);
        break;
      case ClassifierKind::kLinearSvm:
        p.at("center").get_to(m.center);
        p.at("scale").get_to(m.scale);
        p.at("weights").get_to(m.weights);
        p.at("bias").get_to(m.bias);
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed model archive: ") + e.what());
  }
  return m;
}

}  // namespace relx
