#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"

namespace odm {

struct LabeledExample {
  ContextVector x;
  ActionId y;
};

using Dataset = std::vector<LabeledExample>;

// ---------------------------------------------------------------------------
// GaussSine: x1, x2 ~ N(0, 1), u ~ U(0, 1),
//   f = sin(0.15 pi u + x1 + x2) + 1,  y = round(f + U(-q/2, q/2)) clamped to [0, 2].
// ---------------------------------------------------------------------------

struct GaussSineParams {
  double noise_q = 0.0;
  static constexpr int num_classes = 3;
};

/// Label for a fixed latent draw; `noise` is the already-sampled U(-q/2, q/2) term.
ActionId gauss_sine_label(double x1, double x2, double u, double noise);

LabeledExample gauss_sine_draw(const GaussSineParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Delimited-text tabular data.
// ---------------------------------------------------------------------------

enum class TabularErrorKind { MissingFile, UnknownColumn, InsufficientExamples, NonFiniteValue, Malformed };

class TabularError : public std::runtime_error {
 public:
  TabularError(TabularErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  TabularErrorKind kind() const { return kind_; }

 private:
  TabularErrorKind kind_;
};

struct TabularSource {
  std::filesystem::path path;
  std::string label_column;
  /// Empty selects every column except the label.
  std::vector<std::string> feature_columns;
  /// '\0' sniffs the header: tab if it contains one, comma otherwise.
  char delimiter = '\0';
};

/// Whole file, standardized over all rows, labels indexed in first-appearance order.
struct TabularPool {
  Eigen::MatrixXd features;  // rows are examples
  std::vector<ActionId> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  Eigen::Index size() const { return features.rows(); }
};

TabularPool read_tabular_pool(const TabularSource& source);

struct TabularEnvironment {
  Dataset examples;  // training stream, in streaming order
  Dataset heldout;   // disjoint from examples
  int m = 0;
  int feature_dim = 0;
};

/// Per-run split: `sample_n` streamed examples plus a disjoint heldout set of
/// min(heldout_n, pool - sample_n) examples, both drawn without replacement.
TabularEnvironment sample_tabular(const TabularPool& pool, int sample_n, int heldout_n, Rng& rng);

TabularEnvironment load_tabular(const TabularSource& source, int sample_n, int heldout_n, Rng& rng);

// ---------------------------------------------------------------------------
// Simulated fallible human.
// ---------------------------------------------------------------------------

struct NoisyHumanParams {
  double alpha = 0.5;
};

/// With probability alpha returns a uniformly chosen action different from the
/// expert's, so alpha is exactly the human error rate.
ActionId human_action(ActionId expert_action, const NoisyHumanParams& params, int m, Rng& rng);

}  // namespace odm
