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

#include "hefl/gru.hpp"

#include <cmath>

#include "hefl/error.hpp"

namespace hefl::fl {

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

size_t LayerSize(const GruLayerShape& l) {
  return 3 * (l.hidden * (l.hidden + l.input) + l.hidden);
}

// out += W * v, W row-major rows x cols.
void MatVecAdd(const double* w, size_t rows, size_t cols, const double* v,
               double* out) {
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w + r * cols;
    for (size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

// out += W^T * v
void MatTVecAdd(const double* w, size_t rows, size_t cols, const double* v,
                double* out) {
  for (size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    for (size_t c = 0; c < cols; ++c) out[c] += row[c] * v[r];
  }
}

// dW += d (outer) v
void OuterAdd(const double* d, size_t rows, const double* v, size_t cols,
              double* dw) {
  for (size_t r = 0; r < rows; ++r) {
    double* row = dw + r * cols;
    for (size_t c = 0; c < cols; ++c) row[c] += d[r] * v[c];
  }
}

struct StepCache {
  std::vector<double> a;   // [x; h_prev]
  std::vector<double> ra;  // [x; r*h_prev]
  std::vector<double> z, r, c, h_prev, h;
};

}  // namespace

ModelShape ModelShape::Stacked(std::vector<size_t> hidden, size_t input_shape) {
  ModelShape s;
  size_t in = 1;
  for (size_t h : hidden) {
    s.layers.push_back({h, in});
    in = h;
  }
  s.input_shape = input_shape;
  s.dense_output = true;
  return s;
}

void ModelShape::Validate() const {
  if (layers.empty()) Fail(ErrorCode::kInvalidArgument, "model has no layers");
  if (input_shape < 1) Fail(ErrorCode::kInvalidArgument, "input_shape < 1");
  for (size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].hidden == 0 || layers[l].input == 0) {
      Fail(ErrorCode::kInvalidArgument, "layer sizes must be positive");
    }
    if (l > 0 && layers[l].input != layers[l - 1].hidden) {
      Fail(ErrorCode::kInvalidArgument,
           "layer input size must equal previous hidden size");
    }
  }
}

uint64_t ParamCount(const ModelShape& shape) {
  uint64_t w = 0;
  for (const auto& l : shape.layers) {
    w += 3 * (l.hidden * (l.hidden + l.input) + l.hidden);
  }
  if (shape.dense_output && !shape.layers.empty()) {
    w += shape.layers.back().hidden + 1;
  }
  return w;
}

nlohmann::json ToJson(const ModelShape& shape) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : shape.layers) {
    layers.push_back({{"hidden", l.hidden}, {"input", l.input}});
  }
  return {{"layers", layers},
          {"dense_output", shape.dense_output},
          {"input_shape", shape.input_shape},
          {"param_count", ParamCount(shape)}};
}

ModelShape ModelShapeFromJson(const nlohmann::json& j) {
  ModelShape s;
  try {
    for (const auto& l : j.at("layers")) {
      s.layers.push_back(
          {l.at("hidden").get<size_t>(), l.at("input").get<size_t>()});
    }
    s.dense_output = j.value("dense_output", true);
    s.input_shape = j.value("input_shape", size_t{12});
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("model shape: ") + e.what());
  }
  s.Validate();
  return s;
}

// ---------------------------------------------------------------------------

GruModel::GruModel(ModelShape shape, ParamVector params)
    : shape_(std::move(shape)), params_(std::move(params)) {
  shape_.Validate();
  if (params_.size() != ParamCount(shape_)) {
    Fail(ErrorCode::kInvalidArgument, "parameter vector length mismatch");
  }
  for (double v : params_) {
    if (!std::isfinite(v)) Fail(ErrorCode::kDomain, "non-finite weight");
  }
}

GruModel GruModel::Random(const ModelShape& shape, Rng& rng) {
  shape.Validate();
  ParamVector p;
  p.reserve(ParamCount(shape));
  for (const auto& l : shape.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.hidden));
    for (size_t k = 0; k < LayerSize(l); ++k) {
      p.push_back(rng.UniformReal(-bound, bound));
    }
  }
  if (shape.dense_output) {
    const size_t h = shape.layers.back().hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (size_t k = 0; k < h + 1; ++k) p.push_back(rng.UniformReal(-bound, bound));
  }
  return GruModel(shape, std::move(p));
}

GruModel GruModel::Zeros(const ModelShape& shape) {
  return GruModel(shape, ParamVector(ParamCount(shape), 0.0));
}

double GruModel::Predict(std::span<const double> sequence) const {
  return Run(sequence, {}, 0.0, nullptr);
}

double GruModel::LossAndGradient(const Sample& sample,
                                 std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    Fail(ErrorCode::kInvalidArgument, "gradient buffer length mismatch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const double pred = Run(sample.sequence, grad, sample.target, nullptr);
  const double err = pred - sample.target;
  return err * err;
}

double GruModel::Run(std::span<const double> sequence, std::span<double> grad,
                     double target, const std::vector<double>* mask) const {
  if (sequence.size() != shape_.input_shape) {
    Fail(ErrorCode::kInvalidArgument,
         "sequence length " + std::to_string(sequence.size()) +
             " != input_shape " + std::to_string(shape_.input_shape));
  }
  const size_t steps = sequence.size();
  const size_t n_layers = shape_.layers.size();
  const bool backward = !grad.empty();

  std::vector<std::vector<StepCache>> caches(n_layers);
  std::vector<size_t> offsets(n_layers);
  // Layer inputs: the first layer sees the scalar sequence.
  std::vector<std::vector<double>> inputs(steps);
  for (size_t t = 0; t < steps; ++t) {
    inputs[t].assign(shape_.layers[0].input, 0.0);
    inputs[t][0] = sequence[t];
  }

  size_t offset = 0;
  for (size_t li = 0; li < n_layers; ++li) {
    const auto& L = shape_.layers[li];
    const size_t h = L.hidden, in = L.input, cols = in + h;
    offsets[li] = offset;
    const double* wz = params_.data() + offset;
    const double* wr = wz + h * cols;
    const double* wc = wr + h * cols;
    const double* bz = wc + h * cols;
    const double* br = bz + h;
    const double* bc = br + h;

    std::vector<double> h_prev(h, 0.0);
    auto& cache = caches[li];
    cache.resize(steps);
    for (size_t t = 0; t < steps; ++t) {
      StepCache& s = cache[t];
      s.h_prev = h_prev;
      s.a.resize(cols);
      std::copy(inputs[t].begin(), inputs[t].end(), s.a.begin());
      std::copy(h_prev.begin(), h_prev.end(), s.a.begin() + in);
      s.z.assign(bz, bz + h);
      s.r.assign(br, br + h);
      MatVecAdd(wz, h, cols, s.a.data(), s.z.data());
      MatVecAdd(wr, h, cols, s.a.data(), s.r.data());
      for (size_t k = 0; k < h; ++k) {
        s.z[k] = Sigmoid(s.z[k]);
        s.r[k] = Sigmoid(s.r[k]);
      }
      s.ra = s.a;
      for (size_t k = 0; k < h; ++k) s.ra[in + k] = s.r[k] * h_prev[k];
      s.c.assign(bc, bc + h);
      MatVecAdd(wc, h, cols, s.ra.data(), s.c.data());
      s.h.resize(h);
      for (size_t k = 0; k < h; ++k) {
        s.c[k] = std::tanh(s.c[k]);
        s.h[k] = (1.0 - s.z[k]) * h_prev[k] + s.z[k] * s.c[k];
      }
      h_prev = s.h;
    }
    for (size_t t = 0; t < steps; ++t) inputs[t] = cache[t].h;
    offset += LayerSize(L);
  }

  const size_t h_last = shape_.layers.back().hidden;
  std::vector<double> top = caches.back().back().h;
  if (mask != nullptr) {
    for (size_t k = 0; k < h_last; ++k) top[k] *= (*mask)[k];
  }
  double pred;
  if (shape_.dense_output) {
    const double* w = params_.data() + offset;
    pred = w[h_last];
    for (size_t k = 0; k < h_last; ++k) pred += w[k] * top[k];
  } else {
    pred = top[0];
  }
  if (!backward) return pred;

  // Backward pass.
  const double dpred = 2.0 * (pred - target);
  std::vector<std::vector<double>> dh_ext(steps);
  for (auto& v : dh_ext) v.assign(h_last, 0.0);
  if (shape_.dense_output) {
    const double* w = params_.data() + offset;
    double* dw = grad.data() + offset;
    for (size_t k = 0; k < h_last; ++k) {
      dw[k] += dpred * top[k];
      const double m = mask != nullptr ? (*mask)[k] : 1.0;
      dh_ext[steps - 1][k] = dpred * w[k] * m;
    }
    dw[h_last] += dpred;
  } else {
    dh_ext[steps - 1][0] = dpred * (mask != nullptr ? (*mask)[0] : 1.0);
  }

  for (size_t li = n_layers; li-- > 0;) {
    const auto& L = shape_.layers[li];
    const size_t h = L.hidden, in = L.input, cols = in + h;
    const double* wz = params_.data() + offsets[li];
    const double* wr = wz + h * cols;
    const double* wc = wr + h * cols;
    double* dwz = grad.data() + offsets[li];
    double* dwr = dwz + h * cols;
    double* dwc = dwr + h * cols;
    double* dbz = dwc + h * cols;
    double* dbr = dbz + h;
    double* dbc = dbr + h;

    std::vector<std::vector<double>> du(steps, std::vector<double>(in, 0.0));
    std::vector<double> dh_next(h, 0.0);
    std::vector<double> dc_pre(h), dz_pre(h), dr_pre(h), dra(cols), da(cols);
    for (size_t t = steps; t-- > 0;) {
      const StepCache& s = caches[li][t];
      std::vector<double> dh(h);
      for (size_t k = 0; k < h; ++k) dh[k] = dh_ext[t][k] + dh_next[k];
      std::vector<double> dh_prev(h, 0.0);
      for (size_t k = 0; k < h; ++k) {
        const double dc = dh[k] * s.z[k];
        const double dz = dh[k] * (s.c[k] - s.h_prev[k]);
        dh_prev[k] += dh[k] * (1.0 - s.z[k]);
        dc_pre[k] = dc * (1.0 - s.c[k] * s.c[k]);
        dz_pre[k] = dz * s.z[k] * (1.0 - s.z[k]);
      }
      OuterAdd(dc_pre.data(), h, s.ra.data(), cols, dwc);
      for (size_t k = 0; k < h; ++k) dbc[k] += dc_pre[k];
      std::fill(dra.begin(), dra.end(), 0.0);
      MatTVecAdd(wc, h, cols, dc_pre.data(), dra.data());
      for (size_t k = 0; k < h; ++k) {
        const double drh = dra[in + k];
        dh_prev[k] += drh * s.r[k];
        const double dr = drh * s.h_prev[k];
        dr_pre[k] = dr * s.r[k] * (1.0 - s.r[k]);
      }
      OuterAdd(dz_pre.data(), h, s.a.data(), cols, dwz);
      OuterAdd(dr_pre.data(), h, s.a.data(), cols, dwr);
      for (size_t k = 0; k < h; ++k) {
        dbz[k] += dz_pre[k];
        dbr[k] += dr_pre[k];
      }
      std::fill(da.begin(), da.end(), 0.0);
      MatTVecAdd(wz, h, cols, dz_pre.data(), da.data());
      MatTVecAdd(wr, h, cols, dr_pre.data(), da.data());
      for (size_t c = 0; c < in; ++c) du[t][c] = da[c] + dra[c];
      for (size_t k = 0; k < h; ++k) dh_prev[k] += da[in + k];
      dh_next = dh_prev;
    }
    dh_ext = std::move(du);
  }
  return pred;
}

TrainResult GruModel::Train(std::span<const Sample> samples,
                            const TrainOptions& options) const {
  if (options.epochs < 1) Fail(ErrorCode::kTraining, "epochs must be >= 1");
  if (samples.empty()) Fail(ErrorCode::kTraining, "no training samples");
  if (options.dropout < 0.0 || options.dropout >= 1.0) {
    Fail(ErrorCode::kInvalidArgument, "dropout must be in [0, 1)");
  }
  GruModel work = *this;
  std::vector<double> grad(params_.size());
  Rng dropout_rng(options.dropout_seed, "dropout");
  const size_t h_last = shape_.layers.back().hidden;
  std::vector<double> mask(h_last, 1.0);
  TrainResult result;
  for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& s : samples) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::vector<double>* mask_ptr = nullptr;
      if (options.dropout > 0.0) {
        const double keep = 1.0 - options.dropout;
        for (auto& m : mask) {
          m = dropout_rng.UniformReal() < keep ? 1.0 / keep : 0.0;
        }
        mask_ptr = &mask;
      }
      const double pred = work.Run(s.sequence, grad, s.target, mask_ptr);
      const double err = pred - s.target;
      total += err * err;
      for (size_t k = 0; k < grad.size(); ++k) {
        work.params_[k] -= options.learning_rate * grad[k];
      }
    }
    const double loss = total / static_cast<double>(samples.size());
    if (!std::isfinite(loss)) Fail(ErrorCode::kDivergence, "training diverged");
    result.epoch_loss.push_back(loss);
  }
  for (double v : work.params_) {
    if (!std::isfinite(v)) Fail(ErrorCode::kDivergence, "non-finite weight");
  }
  result.params = std::move(work.params_);
  return result;
}

}  // namespace hefl::fl
