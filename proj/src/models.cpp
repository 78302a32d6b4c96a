// Copyright 2026 The OGRS Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ogrs/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ogrs::model {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using VectorMap = Eigen::Map<Vector>;

// Offsets of each block inside the flat weight vector.
struct Layout {
  Eigen::Index w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  int d = 0, h = 0, c = 0;
  bool mlp = false;

  explicit Layout(const Architecture& a) : d(a.input_dim), h(a.hidden_width), c(a.num_classes) {
    mlp = a.kind == ArchKind::kMlp;
    if (mlp) {
      b1 = w1 + Eigen::Index{h} * d;
      w2 = b1 + h;
      b2 = w2 + Eigen::Index{c} * h;
    } else {
      b1 = w1 + Eigen::Index{c} * d;  // output bias for logistic regression
    }
  }
};

struct ConstView {
  ConstMatrixMap w1;  // LR: W (C x d)
  ConstVectorMap b1;  // LR: b (C)
  ConstMatrixMap w2;  // MLP only
  ConstVectorMap b2;  // MLP only

  ConstView(const Layout& l, const double* p)
      : w1(p + l.w1, l.mlp ? l.h : l.c, l.d),
        b1(p + l.b1, l.mlp ? l.h : l.c),
        w2(p + (l.mlp ? l.w2 : 0), l.mlp ? l.c : 0, l.mlp ? l.h : 0),
        b2(p + (l.mlp ? l.b2 : 0), l.mlp ? l.c : 0) {}
};

struct MutView {
  MatrixMap w1;
  VectorMap b1;
  MatrixMap w2;
  VectorMap b2;

  MutView(const Layout& l, double* p)
      : w1(p + l.w1, l.mlp ? l.h : l.c, l.d),
        b1(p + l.b1, l.mlp ? l.h : l.c),
        w2(p + (l.mlp ? l.w2 : 0), l.mlp ? l.c : 0, l.mlp ? l.h : 0),
        b2(p + (l.mlp ? l.b2 : 0), l.mlp ? l.c : 0) {}
};

void check_dimension(const ModelParams& params, const Vector& features) {
  if (features.size() != params.architecture().input_dim) {
    fail(ErrorKind::kInvalidArgument, "feature dimension " + std::to_string(features.size()) +
                                          " does not match model input " +
                                          std::to_string(params.architecture().input_dim));
  }
}

void check_label(const ModelParams& params, int label) {
  require(label >= 0 && label < params.architecture().num_classes, ErrorKind::kInvalidArgument,
          "label " + std::to_string(label) + " outside the model's classes");
}

// Softmax in place; returns log-sum-exp of the input.
double softmax_inplace(Vector& z) {
  const double m = z.maxCoeff();
  z.array() = (z.array() - m).exp();
  const double sum = z.sum();
  z /= sum;
  return m + std::log(sum);
}

// Forward pass keeping the hidden activation.
struct Forward {
  Vector hidden;  // empty for LR
  Vector z;
};

Forward forward(const ModelParams& params, const Vector& x) {
  const Layout l(params.architecture());
  const ConstView v(l, params.weights().data());
  Forward f;
  if (l.mlp) {
    f.hidden = (v.w1 * x + v.b1).array().tanh().matrix();
    f.z = v.w2 * f.hidden + v.b2;
  } else {
    f.z = v.w1 * x + v.b1;
  }
  return f;
}

}  // namespace

std::size_t Architecture::parameter_count() const {
  const auto d = static_cast<std::size_t>(input_dim);
  const auto h = static_cast<std::size_t>(hidden_width);
  const auto c = static_cast<std::size_t>(num_classes);
  if (kind == ArchKind::kMlp) return d * h + h + h * c + c;
  return d * c + c;
}

std::string Architecture::describe() const {
  if (kind == ArchKind::kMlp) {
    return "mlp(" + std::to_string(input_dim) + "," + std::to_string(hidden_width) + "," +
           std::to_string(num_classes) + ")";
  }
  return "logistic_regression(" + std::to_string(input_dim) + "," + std::to_string(num_classes) + ")";
}

void Architecture::validate() const {
  require(input_dim > 0 && num_classes > 0, ErrorKind::kInvalidArgument, "zero-dimension architecture " + describe());
  if (kind == ArchKind::kMlp) {
    require(hidden_width > 0, ErrorKind::kInvalidArgument, "zero-dimension architecture " + describe());
  } else {
    require(hidden_width == 0, ErrorKind::kInvalidArgument, "logistic regression has no hidden layer");
  }
}

ModelParams::ModelParams(Architecture arch, Vector weights) : arch_(arch), weights_(std::move(weights)) {
  arch_.validate();
  require(static_cast<std::size_t>(weights_.size()) == arch_.parameter_count(), ErrorKind::kInvalidArgument,
          "weight vector of length " + std::to_string(weights_.size()) + " does not fit " + arch_.describe());
  require(weights_.allFinite(), ErrorKind::kInvalidArgument, "non-finite model weights");
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng = make_rng(seed, 0x696e6974ULL);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(arch.parameter_count()));
  const Layout l(arch);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, int fan_in, int fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < count; ++i) w[offset + i] = s * (2.0 * uniform01(rng) - 1.0);
  };
  if (l.mlp) {
    fill(l.w1, Eigen::Index{l.h} * l.d, l.d, l.h);
    fill(l.w2, Eigen::Index{l.c} * l.h, l.h, l.c);
  } else {
    fill(l.w1, Eigen::Index{l.c} * l.d, l.d, l.c);
  }
  return ModelParams(arch, std::move(w));
}

ModelParams zero_params(const Architecture& arch) {
  arch.validate();
  return ModelParams(arch, Vector::Zero(static_cast<Eigen::Index>(arch.parameter_count())));
}

Vector logits(const ModelParams& params, const Vector& features) {
  check_dimension(params, features);
  return forward(params, features).z;
}

Vector predict(const ModelParams& params, const Vector& features) {
  Vector z = logits(params, features);
  softmax_inplace(z);
  return z;
}

double loss(const ModelParams& params, const data::LabeledSample& sample) {
  check_dimension(params, sample.features);
  check_label(params, sample.observed_label);
  Vector z = forward(params, sample.features).z;
  const double zy = z[sample.observed_label];
  return softmax_inplace(z) - zy;
}

Vector batch_losses(const ModelParams& params, Eigen::Ref<const Matrix> features, std::span<const int> labels) {
  const Layout l(params.architecture());
  const ConstView v(l, params.weights().data());
  require(features.cols() == l.d, ErrorKind::kInvalidArgument, "feature block has the wrong width");
  require(static_cast<std::size_t>(features.rows()) == labels.size(), ErrorKind::kInvalidArgument,
          "label count does not match feature rows");
  Matrix z;
  if (l.mlp) {
    Matrix hidden = features * v.w1.transpose();
    hidden.rowwise() += v.b1.transpose();
    hidden = hidden.array().tanh().matrix();
    z = hidden * v.w2.transpose();
    z.rowwise() += v.b2.transpose();
  } else {
    z = features * v.w1.transpose();
    z.rowwise() += v.b1.transpose();
  }
  Vector out(z.rows());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    check_label(params, y);
    const double m = z.row(r).maxCoeff();
    const double lse = m + std::log((z.row(r).array() - m).exp().sum());
    out[r] = lse - z(r, y);
  }
  return out;
}

std::vector<int> predict_classes(const ModelParams& params, Eigen::Ref<const Matrix> features) {
  const Layout l(params.architecture());
  const ConstView v(l, params.weights().data());
  require(features.cols() == l.d, ErrorKind::kInvalidArgument, "feature block has the wrong width");
  Matrix z;
  if (l.mlp) {
    Matrix hidden = features * v.w1.transpose();
    hidden.rowwise() += v.b1.transpose();
    hidden = hidden.array().tanh().matrix();
    z = hidden * v.w2.transpose();
    z.rowwise() += v.b2.transpose();
  } else {
    z = features * v.w1.transpose();
    z.rowwise() += v.b1.transpose();
  }
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    int best = 0;
    for (Eigen::Index k = 1; k < z.cols(); ++k) {
      if (z(r, k) > z(r, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

Vector grad_theta(const ModelParams& params, Batch batch) {
  require(!batch.empty(), ErrorKind::kInvalidArgument, "grad_theta on an empty batch");
  const Layout l(params.architecture());
  const ConstView v(l, params.weights().data());
  Vector grad = Vector::Zero(params.weights().size());
  MutView g(l, grad.data());
  for (SampleRef s : batch) {
    check_dimension(params, s->features);
    check_label(params, s->observed_label);
    Forward f = forward(params, s->features);
    softmax_inplace(f.z);
    Vector& residual = f.z;  // p - e_y
    residual[s->observed_label] -= 1.0;
    if (l.mlp) {
      g.w2.noalias() += residual * f.hidden.transpose();
      g.b2 += residual;
      const Vector delta = ((v.w2.transpose() * residual).array() * (1.0 - f.hidden.array().square())).matrix();
      g.w1.noalias() += delta * s->features.transpose();
      g.b1 += delta;
    } else {
      g.w1.noalias() += residual * s->features.transpose();
      g.b1 += residual;
    }
  }
  grad /= static_cast<double>(batch.size());
  return grad;
}

double loss_and_grad_features(const ModelParams& params, const data::LabeledSample& sample, Vector& grad) {
  check_dimension(params, sample.features);
  check_label(params, sample.observed_label);
  const Layout l(params.architecture());
  const ConstView v(l, params.weights().data());
  Forward f = forward(params, sample.features);
  const double zy = f.z[sample.observed_label];
  const double value = softmax_inplace(f.z) - zy;
  Vector& residual = f.z;
  residual[sample.observed_label] -= 1.0;
  if (l.mlp) {
    const Vector delta = ((v.w2.transpose() * residual).array() * (1.0 - f.hidden.array().square())).matrix();
    grad.noalias() = v.w1.transpose() * delta;
  } else {
    grad.noalias() = v.w1.transpose() * residual;
  }
  return value;
}

Vector grad_features(const ModelParams& params, const data::LabeledSample& sample) {
  Vector grad;
  loss_and_grad_features(params, sample, grad);
  return grad;
}

ModelParams sgd_step(const ModelParams& params, Batch batch, double lr) {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::kInvalidArgument, "learning rate must be positive");
  Vector w = params.weights() - lr * grad_theta(params, batch);
  return ModelParams(params.architecture(), std::move(w));
}

double mean_loss(const ModelParams& params, Batch batch) {
  require(!batch.empty(), ErrorKind::kInvalidArgument, "mean_loss on an empty batch");
  double total = 0.0;
  for (SampleRef s : batch) total += loss(params, *s);
  return total / static_cast<double>(batch.size());
}

double finite_diff_check(const ModelParams& params, const data::LabeledSample& sample, double h) {
  require(h > 0.0, ErrorKind::kInvalidArgument, "finite-difference step must be positive");
  double worst = 0.0;
  auto score = [&](double analytic, double numeric) {
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
  };

  const SampleRef one[] = {&sample};
  const Vector g_theta = grad_theta(params, one);
  Vector w = params.weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + h;
    const double up = loss(ModelParams(params.architecture(), w), sample);
    w[i] = saved - h;
    const double down = loss(ModelParams(params.architecture(), w), sample);
    w[i] = saved;
    score(g_theta[i], (up - down) / (2.0 * h));
  }

  const Vector g_x = grad_features(params, sample);
  data::LabeledSample probe = sample;
  for (Eigen::Index k = 0; k < probe.features.size(); ++k) {
    const double saved = probe.features[k];
    probe.features[k] = saved + h;
    const double up = loss(params, probe);
    probe.features[k] = saved - h;
    const double down = loss(params, probe);
    probe.features[k] = saved;
    score(g_x[k], (up - down) / (2.0 * h));
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

const char* kind_name(ArchKind kind) { return kind == ArchKind::kMlp ? "mlp" : "logistic_regression"; }

std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
  return out;
}

}  // namespace

void save_params(const ModelParams& params, const std::filesystem::path& blob_path,
                 const std::filesystem::path& sidecar_path) {
  std::ofstream blob(blob_path, std::ios::binary);
  require(static_cast<bool>(blob), ErrorKind::kIo, "cannot write " + blob_path.string());
  for (Eigen::Index i = 0; i < params.weights().size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(params.weights()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
    blob.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  require(static_cast<bool>(blob), ErrorKind::kIo, "write failed for " + blob_path.string());

  const Architecture& a = params.architecture();
  nlohmann::ordered_json sidecar;
  sidecar["format"] = "ogrs-params";
  sidecar["version"] = 1;
  sidecar["architecture"] = {{"kind", kind_name(a.kind)},
                             {"input_dim", a.input_dim},
                             {"hidden_width", a.hidden_width},
                             {"num_classes", a.num_classes}};
  sidecar["parameter_count"] = a.parameter_count();
  sidecar["dtype"] = "float64";
  sidecar["byte_order"] = "little";
  std::ofstream side(sidecar_path);
  require(static_cast<bool>(side), ErrorKind::kIo, "cannot write " + sidecar_path.string());
  side << sidecar.dump(2) << '\n';
}

ModelParams load_params(const std::filesystem::path& blob_path, const std::filesystem::path& sidecar_path) {
  std::ifstream side(sidecar_path);
  require(static_cast<bool>(side), ErrorKind::kIo, "cannot open " + sidecar_path.string());
  nlohmann::json sidecar;
  try {
    side >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, sidecar_path.string() + ": " + e.what());
  }
  Architecture a;
  try {
    const auto& arch = sidecar.at("architecture");
    const std::string kind = arch.at("kind").get<std::string>();
    require(kind == "mlp" || kind == "logistic_regression", ErrorKind::kParse, "unknown architecture " + kind);
    a.kind = kind == "mlp" ? ArchKind::kMlp : ArchKind::kLogisticRegression;
    a.input_dim = arch.at("input_dim").get<int>();
    a.hidden_width = arch.at("hidden_width").get<int>();
    a.num_classes = arch.at("num_classes").get<int>();
    require(sidecar.at("dtype").get<std::string>() == "float64", ErrorKind::kParse, "unsupported dtype");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, sidecar_path.string() + ": " + e.what());
  }
  a.validate();

  std::ifstream blob(blob_path, std::ios::binary);
  require(static_cast<bool>(blob), ErrorKind::kIo, "cannot open " + blob_path.string());
  Vector w(static_cast<Eigen::Index>(a.parameter_count()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    std::uint64_t bits = 0;
    blob.read(reinterpret_cast<char*>(&bits), sizeof(bits));
    require(static_cast<bool>(blob), ErrorKind::kParse, blob_path.string() + " is shorter than the sidecar declares");
    if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
    w[i] = std::bit_cast<double>(bits);
  }
  char extra = 0;
  require(!blob.read(&extra, 1), ErrorKind::kParse, blob_path.string() + " is longer than the sidecar declares");
  return ModelParams(a, std::move(w));
}

}  // namespace ogrs::model
