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

#include "hefl/fl.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hefl/error.hpp"

namespace hefl::fl {

std::vector<double> DataWindow::LatestFlows(size_t count) const {
  if (count > samples_.size()) {
    Fail(ErrorCode::kInvalidArgument, "window holds fewer samples than requested");
  }
  std::vector<double> out;
  out.reserve(count);
  for (size_t i = samples_.size() - count; i < samples_.size(); ++i) {
    out.push_back(samples_[i].flow);
  }
  return out;
}

DataWindow UpdateDataset(const DataWindow& old,
                         std::span<const TrafficSample> incoming) {
  DataWindow out = old;
  for (const auto& s : incoming) {
    if (!out.samples_.empty() && s.minute <= out.samples_.back().minute) {
      Fail(ErrorCode::kOrdering, "incoming sample is not after the window");
    }
    if (!(s.flow >= 0.0)) Fail(ErrorCode::kValidation, "negative flow");
    out.samples_.push_back(s);
  }
  if (out.samples_.size() > out.max_size_) {
    const size_t remove = out.samples_.size() - out.max_size_;
    out.samples_.erase(out.samples_.begin(),
                       out.samples_.begin() + static_cast<ptrdiff_t>(remove));
  }
  return out;
}

std::vector<Sample> SupervisedPairs(const DataWindow& window,
                                    size_t input_shape, double ceiling) {
  if (window.size() < input_shape + 1) {
    Fail(ErrorCode::kTraining, "window has " + std::to_string(window.size()) +
                                   " samples; need input_shape + 1");
  }
  const auto& s = window.samples();
  std::vector<Sample> out;
  for (size_t start = 0; start + input_shape < s.size(); ++start) {
    Sample pair;
    pair.sequence.reserve(input_shape);
    for (size_t k = 0; k < input_shape; ++k) {
      pair.sequence.push_back(s[start + k].flow / ceiling);
    }
    pair.target = s[start + input_shape].flow / ceiling;
    out.push_back(std::move(pair));
  }
  return out;
}

InferenceCurves OnlineInference(const GruModel& global, const GruModel& baseline,
                                const DataWindow& window,
                                std::span<const TrafficSample> incoming,
                                double ceiling) {
  const size_t p = global.shape().input_shape;
  if (baseline.shape().input_shape != p) {
    Fail(ErrorCode::kInvalidArgument, "models disagree on input_shape");
  }
  if (window.size() < p) {
    Fail(ErrorCode::kIncomplete, "window holds fewer than input_shape samples");
  }
  if (incoming.size() < p) {
    Fail(ErrorCode::kIncomplete, "partial round: stream shorter than input_shape");
  }
  std::deque<double> pred_window;
  for (double f : window.LatestFlows(p)) pred_window.push_back(f / ceiling);
  InferenceCurves out;
  std::vector<double> seq(p);
  for (size_t j = 0; j < p; ++j) {
    std::copy(pred_window.begin(), pred_window.end(), seq.begin());
    out.base.push_back(baseline.Predict(seq) * ceiling);
    out.fed.push_back(global.Predict(seq) * ceiling);
    out.truth.push_back(incoming[j].flow);
    pred_window.pop_front();
    pred_window.push_back(incoming[j].flow / ceiling);
  }
  return out;
}

ParamVector PlaintextFedAvg(std::span<const ParamVector> vectors) {
  if (vectors.empty()) Fail(ErrorCode::kInvalidArgument, "no vectors to average");
  const size_t w = vectors.front().size();
  ParamVector sum(w, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != w) Fail(ErrorCode::kInvalidArgument, "vector length mismatch");
    for (size_t k = 0; k < w; ++k) sum[k] += v[k];
  }
  const double m = static_cast<double>(vectors.size());
  for (auto& x : sum) x /= m;
  return sum;
}

Metrics ComputeMetrics(std::span<const double> pred,
                       std::span<const double> truth) {
  if (pred.empty() || pred.size() != truth.size()) {
    Fail(ErrorCode::kInvalidArgument, "metrics need equal, nonzero lengths");
  }
  Metrics m;
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  size_t pct_n = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    if (truth[i] > 0.0) {
      pct_sum += std::abs(e) / truth[i];
      ++pct_n;
    } else {
      ++m.mape_skipped;
    }
  }
  const double n = static_cast<double>(pred.size());
  m.mae = abs_sum / n;
  m.mse = sq_sum / n;
  m.rmse = std::sqrt(m.mse);
  m.mape = pct_n > 0 ? pct_sum / static_cast<double>(pct_n) : 0.0;
  return m;
}

// ---------------------------------------------------------------------------

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(Trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(Trim(cur));
  return out;
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    Fail(ErrorCode::kParse, "not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

int64_t ParseTimestamp(const std::string& text) {
  const bool integer =
      !text.empty() &&
      text.find_first_not_of("-0123456789") == std::string::npos;
  if (integer) {
    int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      Fail(ErrorCode::kParse, "bad integer timestamp '" + text + "'");
    }
    return v;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tail[8] = {0};
  const int got = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%7s", &y,
                              &mo, &d, &h, &mi, &sec, tail);
  const int got_short =
      got >= 5 ? got : std::sscanf(text.c_str(), "%4d-%2d-%2d %2d:%2d", &y, &mo,
                                   &d, &h, &mi);
  if (got_short < 5) Fail(ErrorCode::kParse, "bad timestamp '" + text + "'");
  if (got == 7 && std::string(tail) != "Z") {
    Fail(ErrorCode::kParse, "only UTC timestamps are supported: '" + text + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) {
    Fail(ErrorCode::kParse, "invalid calendar timestamp '" + text + "'");
  }
  if (sec != 0) Fail(ErrorCode::kValidation, "timestamp off the 5-minute grid");
  const int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * 1440 + h * 60 + mi;
}

std::map<std::string, std::vector<TrafficSample>> ReadTrafficCsv(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kParse, "empty traffic CSV");
  if (SplitComma(line) !=
      std::vector<std::string>{"timestamp", "detector_id", "flow"}) {
    Fail(ErrorCode::kParse, "traffic CSV header must be timestamp,detector_id,flow");
  }
  std::map<std::string, std::vector<TrafficSample>> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cols = SplitComma(line);
    const std::string where = " (line " + std::to_string(line_no) + ")";
    if (cols.size() != 3 || cols[1].empty()) {
      Fail(ErrorCode::kParse, "expected 3 columns" + where);
    }
    TrafficSample s{ParseTimestamp(cols[0]), cols[1], ParseDouble(cols[2])};
    if (s.minute % kSlotMinutes != 0) {
      Fail(ErrorCode::kValidation, "timestamp off the 5-minute grid" + where);
    }
    if (!(s.flow >= 0.0) || !std::isfinite(s.flow)) {
      Fail(ErrorCode::kValidation, "flow must be finite and >= 0" + where);
    }
    auto& stream = out[s.detector_id];
    if (!stream.empty() && s.minute <= stream.back().minute) {
      Fail(ErrorCode::kOrdering, "timestamps must increase per detector" + where);
    }
    stream.push_back(std::move(s));
  }
  return out;
}

std::string WriteTrafficCsv(
    const std::map<std::string, std::vector<TrafficSample>>& streams) {
  std::string out = "timestamp,detector_id,flow\n";
  for (const auto& [id, stream] : streams) {
    for (const auto& s : stream) {
      out += std::to_string(s.minute) + "," + id + "," + FormatDouble(s.flow) + "\n";
    }
  }
  return out;
}

std::string ExportParamsCsv(const ParamVector& params) {
  std::string out;
  for (double v : params) out += FormatDouble(v) + "\n";
  return out;
}

ParamVector ImportParamsCsv(std::istream& in) {
  ParamVector out;
  std::string line;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    out.push_back(ParseDouble(line));
  }
  return out;
}

}  // namespace hefl::fl
