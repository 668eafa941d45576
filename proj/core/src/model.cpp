#include "scada/model.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "scada/error.hpp"

namespace scada {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw InvalidArgument("unknown activation '" + name + "'");
}

namespace {

void check_shape(const Architecture& arch, int num_classes) {
  if (num_classes < 2) throw InvalidArgument("a classifier needs at least 2 classes");
  if (arch.layers.empty()) throw InvalidArgument("architecture has no layers");
  for (int w : arch.layers)
    if (w <= 0) throw InvalidArgument("layer sizes must be positive");
}

}  // namespace

void Classifier::layout() {
  Eigen::Index offset = 0;
  hidden_.clear();
  for (std::size_t l = 1; l < arch_.layers.size(); ++l) {
    Block b;
    b.in = arch_.layers[l - 1];
    b.out = arch_.layers[l];
    b.weight = offset;
    offset += Eigen::Index{b.in} * b.out;
    b.bias = offset;
    offset += b.out;
    hidden_.push_back(b);
  }
  head_.in = arch_.feature_dim();
  head_.out = num_classes_;
  head_.weight = offset;
  offset += Eigen::Index{head_.in} * head_.out;
  head_.bias = offset;
  offset += head_.out;
  params_.resize(offset);
}

Classifier::Classifier(Architecture arch, int num_classes, std::uint64_t seed)
    : arch_(std::move(arch)), num_classes_(num_classes) {
  check_shape(arch_, num_classes_);
  layout();
  std::mt19937_64 rng(seed);
  auto fill = [&](const Block& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(b.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = b.weight; i < b.bias + b.out; ++i) params_[i] = u(rng);
  };
  for (const auto& b : hidden_) fill(b);
  fill(head_);
}

Classifier::Classifier(Architecture arch, int num_classes, Vector parameters)
    : arch_(std::move(arch)), num_classes_(num_classes) {
  check_shape(arch_, num_classes_);
  layout();
  if (parameters.size() != params_.size())
    throw InvalidArgument("parameter vector has " + std::to_string(parameters.size()) + " entries, expected " +
                          std::to_string(params_.size()));
  params_ = std::move(parameters);
}

Eigen::Map<const Matrix> Classifier::weights(const Block& b, const Vector& flat) const {
  return {flat.data() + b.weight, b.out, b.in};
}

Eigen::Map<const Vector> Classifier::bias(const Block& b, const Vector& flat) const {
  return {flat.data() + b.bias, b.out};
}

Eigen::Map<const Matrix> Classifier::head_weights(const Vector& flat) const { return weights(head_, flat); }
Eigen::Map<const Vector> Classifier::head_bias(const Vector& flat) const { return bias(head_, flat); }

ForwardPass Classifier::forward(const Matrix& inputs) const {
  if (inputs.cols() != input_dim())
    throw InvalidArgument("input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                          std::to_string(input_dim()));
  ForwardPass pass;
  pass.activations.reserve(hidden_.size() + 1);
  pass.activations.push_back(inputs);
  for (const auto& b : hidden_) {
    Matrix z = pass.activations.back() * weights(b, params_).transpose();
    z.rowwise() += bias(b, params_).transpose();
    if (arch_.activation == Activation::Tanh)
      z = z.array().tanh().matrix();
    else
      z = z.cwiseMax(0.0);
    pass.activations.push_back(std::move(z));
  }
  pass.logits = pass.features() * head_weights().transpose();
  pass.logits.rowwise() += head_bias().transpose();
  pass.probs = softmax(pass.logits);
  return pass;
}

Gradients Classifier::backward(const ForwardPass& pass, const Matrix& dlogits) const {
  if (dlogits.rows() != pass.logits.rows() || dlogits.cols() != num_classes_)
    throw InvalidArgument("dlogits shape does not match the forward pass");
  Gradients g;
  g.params = Vector::Zero(params_.size());

  auto write = [&g](const Block& b, const Matrix& dz, const Matrix& a_in) {
    Eigen::Map<Matrix>(g.params.data() + b.weight, b.out, b.in) = dz.transpose() * a_in;
    Eigen::Map<Vector>(g.params.data() + b.bias, b.out) = dz.colwise().sum().transpose();
  };

  write(head_, dlogits, pass.features());
  Matrix upstream = dlogits * head_weights();
  for (std::size_t l = hidden_.size(); l-- > 0;) {
    const Matrix& a_out = pass.activations[l + 1];
    Matrix dz;
    if (arch_.activation == Activation::Tanh)
      dz = upstream.array() * (1.0 - a_out.array().square());
    else
      dz = upstream.array() * (a_out.array() > 0.0).cast<double>();
    write(hidden_[l], dz, pass.activations[l]);
    upstream = dz * weights(hidden_[l], params_);
  }
  g.inputs = std::move(upstream);
  return g;
}

Matrix Classifier::predict_proba(const Matrix& inputs) const { return forward(inputs).probs; }

Matrix Classifier::features(const Matrix& inputs) const { return forward(inputs).features(); }

std::vector<int> Classifier::predict(const Matrix& inputs) const {
  const Matrix logits = forward(inputs).logits;
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

Matrix log_softmax(const Matrix& logits) {
  const Vector max = logits.rowwise().maxCoeff();
  Matrix shifted = logits.colwise() - max;
  const Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
  shifted.colwise() -= lse;
  return shifted;
}

Matrix softmax(const Matrix& logits) {
  const Vector max = logits.rowwise().maxCoeff();
  Matrix e = (logits.colwise() - max).array().exp().matrix();
  const Vector sum = e.rowwise().sum();
  for (Eigen::Index i = 0; i < e.rows(); ++i) e.row(i) /= sum[i];
  return e;
}

}  // namespace scada
