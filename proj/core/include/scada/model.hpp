#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scada {

/// Samples are stored as rows.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Tanh, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Layer sizes of the feature extractor: the input dimension followed by the
/// hidden widths. The last entry is the feature dimension h. A single entry
/// means the features are the raw inputs.
struct Architecture {
  std::vector<int> layers;
  Activation activation = Activation::Tanh;

  int input_dim() const { return layers.front(); }
  int feature_dim() const { return layers.back(); }
};

/// Cached intermediate values of one forward pass; the input to backward().
struct ForwardPass {
  std::vector<Matrix> activations;  // [0] is the input batch, back() the features
  Matrix logits;
  Matrix probs;

  const Matrix& inputs() const { return activations.front(); }
  const Matrix& features() const { return activations.back(); }
};

/// Gradient of a scalar loss with respect to parameters and inputs.
struct Gradients {
  Vector params;
  Matrix inputs;
};

/// An MLP feature extractor followed by a linear head with one row per class.
///
/// All parameters live in one flat vector. Layer l of the extractor stores its
/// weight matrix (out x in, column-major) followed by its bias; the head comes
/// last as a (num_classes x h) weight matrix followed by the bias. The row of
/// class c in the head together with bias entry c is the class vector tau_c.
class Classifier {
 public:
  /// Deterministic initialization for a given (architecture, seed).
  /// Throws InvalidArgument for num_classes < 2 or an empty/non-positive
  /// architecture.
  Classifier(Architecture arch, int num_classes, std::uint64_t seed);

  /// Rebuilds a classifier from an existing flat parameter vector.
  Classifier(Architecture arch, int num_classes, Vector parameters);

  const Architecture& architecture() const { return arch_; }
  int num_classes() const { return num_classes_; }
  int input_dim() const { return arch_.input_dim(); }
  int feature_dim() const { return arch_.feature_dim(); }
  Eigen::Index num_parameters() const { return params_.size(); }

  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }

  ForwardPass forward(const Matrix& inputs) const;

  /// Backpropagates dL/dlogits (one row per sample in `pass`).
  Gradients backward(const ForwardPass& pass, const Matrix& dlogits) const;

  Matrix predict_proba(const Matrix& inputs) const;
  Matrix features(const Matrix& inputs) const;
  std::vector<int> predict(const Matrix& inputs) const;

  /// Head weight matrix (num_classes x h) and bias viewed inside a flat vector
  /// laid out like parameters(), e.g. a gradient.
  Eigen::Map<const Matrix> head_weights(const Vector& flat) const;
  Eigen::Map<const Vector> head_bias(const Vector& flat) const;
  Eigen::Map<const Matrix> head_weights() const { return head_weights(params_); }
  Eigen::Map<const Vector> head_bias() const { return head_bias(params_); }

  /// Flat index range [begin, end) of the head inside the parameter vector.
  Eigen::Index head_offset() const { return head_.weight; }

 private:
  struct Block {
    Eigen::Index weight = 0;
    Eigen::Index bias = 0;
    int in = 0;
    int out = 0;
  };

  void layout();
  Eigen::Map<const Matrix> weights(const Block& b, const Vector& flat) const;
  Eigen::Map<const Vector> bias(const Block& b, const Vector& flat) const;

  Architecture arch_;
  int num_classes_;
  std::vector<Block> hidden_;
  Block head_;
  Vector params_;
};

/// Row-wise numerically stable softmax and log-softmax.
Matrix softmax(const Matrix& logits);
Matrix log_softmax(const Matrix& logits);

}  // namespace scada
