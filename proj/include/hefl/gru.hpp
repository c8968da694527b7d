// Copyright 2026 The hefl Authors
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

#ifndef HEFL_GRU_HPP_
#define HEFL_GRU_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hefl/rng.hpp"
#include "json.hpp"

namespace hefl::fl {

struct GruLayerShape {
  size_t hidden = 0;
  size_t input = 0;
};

/// Stacked GRU layers followed (optionally) by a dense scalar output.
struct ModelShape {
  std::vector<GruLayerShape> layers;
  bool dense_output = true;
  size_t input_shape = 12;  // sequence length fed per prediction

  /// Two layers of `hidden` units over scalar inputs, dense output.
  static ModelShape Stacked(std::vector<size_t> hidden, size_t input_shape = 12);

  void Validate() const;
};

/// Trainable weights. Per GRU layer each of the three gates holds
/// h*(h+i) weights plus h biases; the dense head holds h_last + 1.
uint64_t ParamCount(const ModelShape& shape);

nlohmann::json ToJson(const ModelShape& shape);
ModelShape ModelShapeFromJson(const nlohmann::json& j);

/// Flat parameters in canonical order: for each layer W_z, W_r, W_c
/// (row-major h x (i+h), input columns first) then b_z, b_r, b_c; then the
/// dense weights and bias.
using ParamVector = std::vector<double>;

struct Sample {
  std::vector<double> sequence;  // normalized, length input_shape
  double target = 0.0;           // normalized
};

struct TrainOptions {
  size_t epochs = 5;
  double learning_rate = 0.01;
  double dropout = 0.0;
  uint64_t dropout_seed = 0;
};

struct TrainResult {
  ParamVector params;
  std::vector<double> epoch_loss;  // mean squared error per epoch
};

class GruModel {
 public:
  GruModel(ModelShape shape, ParamVector params);

  /// Uniform in +-1/sqrt(h) per layer.
  static GruModel Random(const ModelShape& shape, Rng& rng);
  static GruModel Zeros(const ModelShape& shape);

  const ModelShape& shape() const { return shape_; }
  const ParamVector& params() const { return params_; }
  int64_t round_tag() const { return round_tag_; }
  void set_round_tag(int64_t tag) { round_tag_ = tag; }

  /// One-step-ahead prediction (normalized units).
  double Predict(std::span<const double> sequence) const;

  /// Squared error (pred - target)^2 and its gradient w.r.t. params.
  double LossAndGradient(const Sample& sample, std::span<double> grad) const;

  /// Plain SGD, one update per sample, samples in order.
  TrainResult Train(std::span<const Sample> samples,
                    const TrainOptions& options) const;

 private:
  double Run(std::span<const double> sequence, std::span<double> grad,
             double target, const std::vector<double>* dropout_mask) const;

  ModelShape shape_;
  ParamVector params_;
  int64_t round_tag_ = 0;
};

}  // namespace hefl::fl

#endif  // HEFL_GRU_HPP_
