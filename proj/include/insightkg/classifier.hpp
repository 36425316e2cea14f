#pragma once

// Three-class stance classifier: one-vs-rest SVMs over sentence embeddings,
// stratified k-fold grid search, evaluation and model persistence.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "insightkg/embedding.hpp"
#include "insightkg/error.hpp"
#include "insightkg/labels.hpp"
#include "insightkg/svm.hpp"

namespace ikg::classify {

struct TrainingData {
  std::vector<std::vector<double>> x;
  std::vector<Label> y;
  std::string provider_tag;
};

struct GridSpec {
  std::vector<svm::KernelKind> kernels = {svm::KernelKind::rbf};
  std::vector<double> C = {0.1, 1, 10, 100};
  std::vector<double> gamma = {0.001, 0.01, 0.1, 1};
  std::size_t folds = 5;
  svm::SmoOptions smo;
};

struct GridCell {
  svm::Kernel kernel;
  double C = 1.0;
  double cv_macro_f1 = 0.0;
};

struct BinaryMachine {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = true;

  double decision(const svm::Kernel& kernel, std::span<const double> x) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) f += coefficients[i] * kernel(support_vectors[i], x);
    return f;
  }
};

struct EvalReport {
  std::array<std::array<std::size_t, 3>, 3> confusion{};  // [true][predicted]
  std::array<double, 3> precision{};
  std::array<double, 3> recall{};
  std::array<double, 3> f1{};
  std::array<std::size_t, 3> support{};
  double macro_f1 = 0.0;
};

// tp / (tp + fp) etc. computed as single divisions so hand-derived
// fractions compare exactly; 0/0 is 0.
inline EvalReport evaluate_predictions(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) fail(ErrorCode::invalid_argument, "truth/prediction length mismatch");
  EvalReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion[index_of(truth[i])][index_of(predicted[i])];
  double sum_f1 = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t tp = r.confusion[c][c];
    std::size_t col = 0, row = 0;
    for (std::size_t k = 0; k < 3; ++k) col += r.confusion[k][c], row += r.confusion[c][k];
    r.support[c] = row;
    const std::size_t fp = col - tp, fn = row - tp;
    r.precision[c] = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    r.recall[c] = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    const std::size_t denom = 2 * tp + fp + fn;
    r.f1[c] = denom ? static_cast<double>(2 * tp) / static_cast<double>(denom) : 0.0;
    sum_f1 += r.f1[c];
  }
  r.macro_f1 = sum_f1 / 3.0;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (auto l : kAllLabels) {
    const auto c = index_of(l);
    classes[std::string(to_string(l))] = {
        {"precision", r.precision[c]}, {"recall", r.recall[c]}, {"f1", r.f1[c]}, {"support", r.support[c]}};
  }
  return {{"classes", classes}, {"confusion", r.confusion}, {"macro_f1", r.macro_f1},
          {"confusion_order", {"resolved", "neutral", "finding"}}};
}

// Two-decimal table for humans; stored values keep full precision.
inline std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  char buf[96];
  out << "class      precision  recall  f1-score  support\n";
  for (auto l : kAllLabels) {
    const auto c = index_of(l);
    std::snprintf(buf, sizeof buf, "%-10s %9.2f  %6.2f  %8.2f  %7zu\n", std::string(to_string(l)).c_str(),
                  r.precision[c], r.recall[c], r.f1[c], r.support[c]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "macro-f1   %27.2f\n", r.macro_f1);
  out << buf;
  return out.str();
}

struct SvmModel {
  svm::Kernel kernel;
  double C = 1.0;
  std::string provider_tag;
  std::size_t dim = 0;
  std::array<std::optional<BinaryMachine>, 3> machines;  // indexed by Label
  std::vector<GridCell> grid_scores;
  std::size_t folds = 0;
  std::vector<std::string> warnings;

  std::array<double, 3> decision_values(std::span<const double> x) const {
    std::array<double, 3> d{};
    for (std::size_t c = 0; c < 3; ++c)
      d[c] = machines[c] ? machines[c]->decision(kernel, x) : -std::numeric_limits<double>::infinity();
    return d;
  }

  // argmax of the one-vs-rest decisions; exact ties resolve to the earlier
  // label in Resolved, Neutral, Finding order.
  Label predict(std::span<const double> x) const {
    const auto d = decision_values(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (d[c] > d[best]) best = c;
    return static_cast<Label>(best);
  }

  Label classify(const embed::EmbeddingVector& v) const {
    if (v.provider_tag != provider_tag)
      fail(ErrorCode::invalid_argument,
           "vector from provider '" + v.provider_tag + "' but model trained on '" + provider_tag + "'");
    if (v.dim() != dim) fail(ErrorCode::invalid_argument, "vector dimension does not match model");
    return predict(v.values);
  }
};

namespace detail {

struct Geometry {
  svm::KernelMatrix dots;
  std::vector<double> sq;
};

inline Geometry geometry(const std::vector<std::vector<double>>& x) {
  Geometry g{svm::KernelMatrix::compute(x, svm::Kernel{svm::KernelKind::linear, 0.0}), {}};
  for (std::size_t i = 0; i < x.size(); ++i) g.sq.push_back(g.dots(i, i));
  return g;
}

inline svm::KernelMatrix sub_kernel(const Geometry& g, const svm::Kernel& kernel, const std::vector<std::size_t>& idx) {
  svm::KernelMatrix m(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a; b < idx.size(); ++b)
      m.at(a, b) = m.at(b, a) = kernel.from_dot(g.dots(idx[a], idx[b]), g.sq[idx[a]], g.sq[idx[b]]);
  return m;
}

struct FittedMachine {
  std::vector<std::size_t> support;  // positions within the training index list
  std::vector<double> coefficients;
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

// One-vs-rest machines for every label present in `labels`.
inline std::array<std::optional<FittedMachine>, 3> fit_ovr(const svm::KernelMatrix& k, const std::vector<Label>& labels,
                                                           double C, const svm::SmoOptions& smo) {
  std::array<std::optional<FittedMachine>, 3> out;
  std::array<bool, 3> present{};
  for (auto l : labels) present[index_of(l)] = true;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!present[c]) continue;
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = index_of(labels[i]) == c ? 1 : -1;
    FittedMachine fm;
    const auto res = svm::solve_smo(k, y, C, smo);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (res.alpha[i] > 0.0) {
        fm.support.push_back(i);
        fm.coefficients.push_back(res.alpha[i] * y[i]);
      }
    }
    fm.bias = res.bias;
    fm.iterations = res.iterations;
    fm.converged = res.converged;
    out[c] = std::move(fm);
  }
  return out;
}

// Stratified fold assignment: the r-th example of each class goes to fold r mod k.
inline std::vector<std::size_t> stratified_folds(const std::vector<Label>& y, std::size_t k) {
  std::vector<std::size_t> fold(y.size());
  std::array<std::size_t, 3> seen{};
  for (std::size_t i = 0; i < y.size(); ++i) fold[i] = seen[index_of(y[i])]++ % k;
  return fold;
}

inline double cv_macro_f1(const Geometry& g, const TrainingData& data, const svm::Kernel& kernel, double C,
                          const GridSpec& spec, const std::array<bool, 3>& present) {
  const auto fold = stratified_folds(data.y, spec.folds);
  std::vector<Label> truth, predicted;
  for (std::size_t f = 0; f < spec.folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.y.size(); ++i) (fold[i] == f ? test_idx : train_idx).push_back(i);
    std::vector<Label> train_y;
    for (auto i : train_idx) train_y.push_back(data.y[i]);
    const auto machines = fit_ovr(sub_kernel(g, kernel, train_idx), train_y, C, spec.smo);
    for (auto t : test_idx) {
      std::size_t best = 0;
      double best_value = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t c = 0; c < 3; ++c) {
        if (!machines[c]) continue;
        double d = machines[c]->bias;
        for (std::size_t s = 0; s < machines[c]->support.size(); ++s) {
          const auto sv = train_idx[machines[c]->support[s]];
          d += machines[c]->coefficients[s] * kernel.from_dot(g.dots(sv, t), g.sq[sv], g.sq[t]);
        }
        if (!any || d > best_value) best = c, best_value = d, any = true;
      }
      truth.push_back(data.y[t]);
      predicted.push_back(static_cast<Label>(best));
    }
  }
  const auto report = evaluate_predictions(truth, predicted);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < 3; ++c)
    if (present[c]) sum += report.f1[c], ++n;
  return sum / static_cast<double>(n);
}

inline void validate(const TrainingData& data) {
  if (data.x.size() != data.y.size()) fail(ErrorCode::invalid_argument, "feature/label count mismatch");
  if (data.x.empty()) fail(ErrorCode::invalid_argument, "empty training set");
  for (const auto& v : data.x)
    if (v.size() != data.x.front().size()) fail(ErrorCode::invalid_argument, "training vectors differ in dimension");
  std::array<std::size_t, 3> counts{};
  for (auto l : data.y) ++counts[index_of(l)];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
    fail(ErrorCode::invalid_argument, "training data must contain at least two classes");
}

}  // namespace detail

// Fits all one-vs-rest machines for a fixed kernel and C.
inline SvmModel fit(const TrainingData& data, const svm::Kernel& kernel, double C, const svm::SmoOptions& smo = {}) {
  detail::validate(data);
  const auto machines = detail::fit_ovr(svm::KernelMatrix::compute(data.x, kernel), data.y, C, smo);
  SvmModel model;
  model.kernel = kernel;
  model.C = C;
  model.provider_tag = data.provider_tag;
  model.dim = data.x.front().size();
  for (std::size_t c = 0; c < 3; ++c) {
    if (!machines[c]) continue;
    BinaryMachine bm;
    for (auto s : machines[c]->support) bm.support_vectors.push_back(data.x[s]);
    bm.coefficients = machines[c]->coefficients;
    bm.bias = machines[c]->bias;
    bm.iterations = machines[c]->iterations;
    bm.converged = machines[c]->converged;
    if (!bm.converged)
      model.warnings.push_back("convergence: " + std::string(to_string(static_cast<Label>(c))) +
                               " machine stopped at the iteration cap");
    model.machines[c] = std::move(bm);
  }
  return model;
}

// Exhaustive grid over kernels x C x gamma scored by stratified k-fold
// macro-F1; ties keep the smaller C, then the smaller gamma.
inline std::vector<GridCell> grid_search(const TrainingData& data, const GridSpec& spec) {
  detail::validate(data);
  if (spec.C.empty()) fail(ErrorCode::invalid_argument, "grid has no C values");
  std::array<std::size_t, 3> counts{};
  for (auto l : data.y) ++counts[index_of(l)];
  std::size_t min_count = std::numeric_limits<std::size_t>::max();
  std::array<bool, 3> present{};
  for (std::size_t c = 0; c < 3; ++c)
    if (counts[c] > 0) present[c] = true, min_count = std::min(min_count, counts[c]);
  if (spec.folds < 2 || spec.folds > min_count)
    fail(ErrorCode::invalid_argument, "folds must be in [2, " + std::to_string(min_count) + "]");

  const auto g = detail::geometry(data.x);
  std::vector<GridCell> cells;
  for (auto kind : spec.kernels) {
    std::vector<double> gammas = kind == svm::KernelKind::rbf ? spec.gamma : std::vector<double>{0.0};
    if (gammas.empty()) fail(ErrorCode::invalid_argument, "rbf grid has no gamma values");
    for (double C : spec.C)
      for (double gamma : gammas) {
        const svm::Kernel kernel{kind, gamma};
        cells.push_back(GridCell{kernel, C, detail::cv_macro_f1(g, data, kernel, C, spec, present)});
      }
  }
  return cells;
}

inline const GridCell& best_cell(const std::vector<GridCell>& cells) {
  const GridCell* best = &cells.front();
  for (const auto& c : cells) {
    if (c.cv_macro_f1 > best->cv_macro_f1 ||
        (c.cv_macro_f1 == best->cv_macro_f1 &&
         (c.C < best->C || (c.C == best->C && c.kernel.gamma < best->kernel.gamma))))
      best = &c;
  }
  return *best;
}

inline SvmModel train(const TrainingData& data, const GridSpec& spec = {}) {
  auto cells = grid_search(data, spec);
  const auto chosen = best_cell(cells);
  auto model = fit(data, chosen.kernel, chosen.C, spec.smo);
  model.grid_scores = std::move(cells);
  model.folds = spec.folds;
  return model;
}

inline EvalReport evaluate(const SvmModel& model, const std::vector<embed::EmbeddingVector>& x,
                           const std::vector<Label>& truth) {
  if (x.empty()) fail(ErrorCode::invalid_argument, "empty test set");
  std::vector<Label> predicted;
  predicted.reserve(x.size());
  for (const auto& v : x) predicted.push_back(model.classify(v));
  return evaluate_predictions(truth, predicted);
}

// --- persistence ---------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const SvmModel& m) {
  nlohmann::json machines = nlohmann::json::array();
  for (std::size_t c = 0; c < 3; ++c) {
    if (!m.machines[c]) {
      machines.push_back(nullptr);
      continue;
    }
    const auto& b = *m.machines[c];
    machines.push_back({{"label", to_string(static_cast<Label>(c))},
                        {"support_vectors", b.support_vectors},
                        {"coefficients", b.coefficients},
                        {"bias", b.bias},
                        {"iterations", b.iterations},
                        {"converged", b.converged}});
  }
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& cell : m.grid_scores)
    grid.push_back({{"kernel", to_string(cell.kernel.kind)}, {"C", cell.C}, {"gamma", cell.kernel.gamma},
                    {"cv_macro_f1", cell.cv_macro_f1}});
  return {{"format", "insightkg-svm"},
          {"version", kModelFormatVersion},
          {"kernel", to_string(m.kernel.kind)},
          {"gamma", m.kernel.gamma},
          {"C", m.C},
          {"provider_tag", m.provider_tag},
          {"dim", m.dim},
          {"folds", m.folds},
          {"grid", grid},
          {"machines", machines},
          {"warnings", m.warnings}};
}

inline svm::KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return svm::KernelKind::linear;
  if (s == "rbf") return svm::KernelKind::rbf;
  fail(ErrorCode::invalid_argument, "unknown kernel '" + s + "'");
}

inline SvmModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "insightkg-svm")
      fail(ErrorCode::input_error, "not an insightkg SVM model");
    if (j.at("version").get<int>() != kModelFormatVersion)
      fail(ErrorCode::input_error, "unsupported model version " + std::to_string(j.at("version").get<int>()));
    SvmModel m;
    m.kernel = svm::Kernel{parse_kernel(j.at("kernel").get<std::string>()), j.at("gamma").get<double>()};
    m.C = j.at("C").get<double>();
    m.provider_tag = j.at("provider_tag").get<std::string>();
    m.dim = j.at("dim").get<std::size_t>();
    m.folds = j.value("folds", std::size_t{0});
    for (const auto& cell : j.value("grid", nlohmann::json::array()))
      m.grid_scores.push_back(GridCell{svm::Kernel{parse_kernel(cell.at("kernel").get<std::string>()),
                                                   cell.at("gamma").get<double>()},
                                       cell.at("C").get<double>(), cell.at("cv_macro_f1").get<double>()});
    const auto& machines = j.at("machines");
    if (!machines.is_array() || machines.size() != 3) fail(ErrorCode::input_error, "model needs three machine slots");
    for (std::size_t c = 0; c < 3; ++c) {
      if (machines[c].is_null()) continue;
      BinaryMachine b;
      b.support_vectors = machines[c].at("support_vectors").get<std::vector<std::vector<double>>>();
      b.coefficients = machines[c].at("coefficients").get<std::vector<double>>();
      b.bias = machines[c].at("bias").get<double>();
      b.iterations = machines[c].value("iterations", std::size_t{0});
      b.converged = machines[c].value("converged", true);
      if (b.support_vectors.size() != b.coefficients.size())
        fail(ErrorCode::input_error, "support vector / coefficient count mismatch");
      m.machines[c] = std::move(b);
    }
    m.warnings = j.value("warnings", std::vector<std::string>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::input_error, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace ikg::classify
