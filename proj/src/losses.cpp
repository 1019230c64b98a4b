// Copyright 2026 The MobileDenseNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "mdn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mdn {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }
double nll(double p) { return -std::log(clamp_prob(p)); }

}  // namespace

double diou_loss(const BoxXYXY& pred, const BoxXYXY& gt) {
  std::array<double, 4> unused{};
  return diou_loss_grad(pred, gt, unused);
}

double diou_loss_grad(const BoxXYXY& p, const BoxXYXY& g, std::array<double, 4>& grad) {
  const double iw = std::min(p.x2, g.x2) - std::max(p.x1, g.x1);
  const double ih = std::min(p.y2, g.y2) - std::max(p.y1, g.y1);
  const bool overlap = iw > 0.0 && ih > 0.0;
  const double inter = overlap ? iw * ih : 0.0;
  const double pw = p.width(), ph = p.height();
  const double uni = p.area() + g.area() - inter;
  const double iou_v = uni > 0.0 ? inter / uni : 0.0;

  // d inter / d (x1, y1, x2, y2)
  std::array<double, 4> di{0, 0, 0, 0};
  if (overlap) {
    di[0] = p.x1 > g.x1 ? -ih : 0.0;
    di[1] = p.y1 > g.y1 ? -iw : 0.0;
    di[2] = p.x2 < g.x2 ? ih : 0.0;
    di[3] = p.y2 < g.y2 ? iw : 0.0;
  }
  const std::array<double, 4> da{-ph, -pw, ph, pw};

  const double dx = p.center_x() - g.center_x();
  const double dy = p.center_y() - g.center_y();
  const double rho2 = dx * dx + dy * dy;
  const double cw = std::max(p.x2, g.x2) - std::min(p.x1, g.x1);
  const double ch = std::max(p.y2, g.y2) - std::min(p.y1, g.y1);
  const double c2 = cw * cw + ch * ch;
  const std::array<double, 4> drho{dx, dy, dx, dy};
  const std::array<double, 4> dc2{p.x1 < g.x1 ? -2.0 * cw : 0.0, p.y1 < g.y1 ? -2.0 * ch : 0.0,
                                  p.x2 > g.x2 ? 2.0 * cw : 0.0, p.y2 > g.y2 ? 2.0 * ch : 0.0};

  for (int k = 0; k < 4; ++k) {
    double d_iou = 0.0;
    if (uni > 0.0) d_iou = (di[k] * uni - inter * (da[k] - di[k])) / (uni * uni);
    double d_pen = 0.0;
    if (c2 > 0.0) d_pen = (drho[k] * c2 - rho2 * dc2[k]) / (c2 * c2);
    grad[k] = -d_iou + d_pen;
  }
  return 1.0 - iou_v + (c2 > 0.0 ? rho2 / c2 : 0.0);
}

double smooth_l1(const Offsets& pred, const Offsets& target, Offsets* grad) {
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double d = pred[k] - target[k];
    const double ad = std::abs(d);
    if (ad < 1.0) {
      sum += 0.5 * d * d;
      if (grad) (*grad)[k] = d;
    } else {
      sum += ad - 0.5;
      if (grad) (*grad)[k] = d > 0 ? 1.0 : -1.0;
    }
  }
  return sum;
}

int hard_negative_count(int n_pos, int n_neg, int ratio) {
  return std::min(ratio * std::max(n_pos, 1), n_neg);
}

std::vector<std::size_t> select_hard_negatives(std::span<const double> loss,
                                               std::span<const unsigned char> candidate,
                                               std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < loss.size(); ++i)
    if (candidate[i]) idx.push_back(i);
  k = std::min(k, idx.size());
  auto harder = [&](std::size_t a, std::size_t b) {
    if (loss[a] != loss[b]) return loss[a] > loss[b];
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), harder);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double ce_hard_negative_image(std::span<const double> probs, int num_classes,
                              const MatchResult& match, int ratio, double neg_coef,
                              int* n_neg_selected) {
  const std::size_t n = match.gt_index.size();
  const int bg = num_classes - 1;
  std::vector<double> bg_loss(n, 0.0);
  std::vector<unsigned char> cand(n, 0);
  double pos = 0.0;
  int n_pos = 0, n_neg = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (match.gt_index[a] != kUnmatched) {
      pos += nll(probs[a * num_classes + match.label[a]]);
      ++n_pos;
    } else {
      bg_loss[a] = nll(probs[a * num_classes + bg]);
      cand[a] = 1;
      ++n_neg;
    }
  }
  const auto sel = select_hard_negatives(bg_loss, cand, hard_negative_count(n_pos, n_neg, ratio));
  double neg = 0.0;
  for (auto a : sel) neg += bg_loss[a];
  if (n_neg_selected) *n_neg_selected = static_cast<int>(sel.size());
  return pos + neg_coef * neg;
}

double focal_image(std::span<const double> probs, int num_classes, const MatchResult& match,
                   double alpha, double gamma) {
  const std::size_t n = match.gt_index.size();
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double pt = clamp_prob(probs[a * num_classes + match.label[a]]);
    sum += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  return sum;
}

namespace {

// Log-sum-exp of each anchor's logits.
template <typename T>
void row_lse(const T* logits, std::size_t anchors, int k, double* lse) {
  for (std::size_t a = 0; a < anchors; ++a) {
    const T* z = logits + a * k;
    double m = z[0];
    for (int c = 1; c < k; ++c) m = std::max(m, static_cast<double>(z[c]));
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(z[c] - m);
    lse[a] = m + std::log(s);
  }
}

// Writes scale * (softmax - onehot(target)) into g.
template <typename T>
void softmax_ce_grad(const T* z, int k, double lse, int target, double scale, T* g) {
  for (int c = 0; c < k; ++c) {
    const double p = std::exp(z[c] - lse);
    g[c] = static_cast<T>(scale * (p - (c == target ? 1.0 : 0.0)));
  }
}

}  // namespace

template <typename T>
LossBreakdown detection_loss(const Tensor<T>& cls, const Tensor<T>& box,
                             const LossTargets& targets, const ModelConfig& config,
                             Tensor<T>* dcls, Tensor<T>* dbox) {
  const int batch = cls.n();
  const std::size_t A = static_cast<std::size_t>(cls.w());
  const int K = cls.c();
  const int bg = K - 1;
  const auto& matches = *targets.matches;
  const auto& anchors = *targets.anchors;
  if (K != config.num_classes || box.w() != cls.w() || box.c() != 4 ||
      anchors.size() != A || matches.size() != static_cast<std::size_t>(batch) ||
      targets.gts->size() != static_cast<std::size_t>(batch))
    throw std::invalid_argument("detection_loss: inconsistent shapes");

  LossBreakdown out;
  for (const auto& m : matches) out.n_pos += m.n_pos;
  out.no_positives = out.n_pos == 0;
  const double divisor = std::max(out.n_pos, 1);
  const bool focal = config.cls_loss == ClsLossKind::kFocal;

  if (dcls) {
    *dcls = Tensor<T>(cls.n(), cls.h(), cls.w(), cls.c());
  }
  if (dbox) {
    *dbox = Tensor<T>(box.n(), box.h(), box.w(), box.c());
  }

  std::vector<double> lse(static_cast<std::size_t>(batch) * A);
  std::vector<double> cls_sum(batch, 0.0), loc_sum(batch, 0.0);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n)
    row_lse(cls.data() + n * A * K, A, K, lse.data() + n * A);

  // Classification.
  if (focal) {
    const double alpha = config.focal_alpha, gamma = config.focal_gamma;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < batch; ++n) {
      const MatchResult& m = matches[n];
      double s = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const T* z = cls.data() + (n * A + a) * K;
        const double l = lse[n * A + a];
        const int t = m.label[a];
        const double pt_raw = std::exp(z[t] - l);
        const double pt = clamp_prob(pt_raw);
        const double one_m = 1.0 - pt;
        s += -alpha * std::pow(one_m, gamma) * std::log(pt);
        if (dcls) {
          // d FL / d p_t, then through softmax: d p_t / d z_j = p_t (delta_tj - p_j).
          const double pow_g1 = gamma == 0.0 ? 0.0 : (one_m > 0.0 ? std::pow(one_m, gamma - 1.0) : 0.0);
          const double dfl_dpt =
              alpha * (gamma * pow_g1 * std::log(pt) - std::pow(one_m, gamma) / pt);
          T* g = dcls->data() + (n * A + a) * K;
          for (int c = 0; c < K; ++c) {
            const double pc = std::exp(z[c] - l);
            g[c] = static_cast<T>(dfl_dpt * pt_raw * ((c == t ? 1.0 : 0.0) - pc) / divisor);
          }
        }
      }
      cls_sum[n] = s;
    }
  } else {
    const double coef = config.negative_coefficient;
    std::vector<double> bg_loss(static_cast<std::size_t>(batch) * A, 0.0);
    std::vector<unsigned char> cand(static_cast<std::size_t>(batch) * A, 0);
    std::vector<int> n_neg(batch, 0);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < batch; ++n) {
      const MatchResult& m = matches[n];
      double s = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const std::size_t i = n * A + a;
        const T* z = cls.data() + i * K;
        if (m.gt_index[a] != kUnmatched) {
          s += nll(std::exp(z[m.label[a]] - lse[i]));
          if (dcls) softmax_ce_grad(z, K, lse[i], m.label[a], 1.0 / divisor, dcls->data() + i * K);
        } else {
          bg_loss[i] = nll(std::exp(z[bg] - lse[i]));
          cand[i] = 1;
          ++n_neg[n];
        }
      }
      cls_sum[n] = s;
    }
    std::vector<std::size_t> selected;
    if (config.mining_scope == MiningScope::kPerBatch) {
      int total_neg = 0;
      for (int v : n_neg) total_neg += v;
      selected = select_hard_negatives(
          bg_loss, cand, hard_negative_count(out.n_pos, total_neg, config.pos_neg_ratio));
    } else {
      for (int n = 0; n < batch; ++n) {
        const std::span<const double> l(bg_loss.data() + n * A, A);
        const std::span<const unsigned char> c(cand.data() + n * A, A);
        for (auto a : select_hard_negatives(
                 l, c, hard_negative_count(matches[n].n_pos, n_neg[n], config.pos_neg_ratio)))
          selected.push_back(n * A + a);
      }
    }
    out.n_neg_selected = static_cast<int>(selected.size());
    for (auto i : selected) {
      cls_sum[i / A] += coef * bg_loss[i];
      if (dcls)
        softmax_ce_grad(cls.data() + i * K, K, lse[i], bg, coef / divisor, dcls->data() + i * K);
    }
  }

  // Localization.
  const bool use_diou = config.loc_loss == LocLossKind::kDiou;
  const double a_w = config.balance_a;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    const MatchResult& m = matches[n];
    const auto& gts = (*targets.gts)[n];
    double s = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      if (m.gt_index[a] == kUnmatched) continue;
      const T* t = box.data() + (n * A + a) * 4;
      const Offsets off{t[0], t[1], t[2], t[3]};
      Offsets g{0, 0, 0, 0};
      if (use_diou) {
        const BoxXYXY& anc = anchors.boxes[a];
        const BoxXYXY pred = decode(off, anc);
        std::array<double, 4> dc{};
        s += diou_loss_grad(pred, gts[m.gt_index[a]].box, dc);
        const double d_cx = dc[0] + dc[2], d_cy = dc[1] + dc[3];
        const double d_w = 0.5 * (dc[2] - dc[0]), d_h = 0.5 * (dc[3] - dc[1]);
        g[0] = d_cx * kCenterVariance * anc.width();
        g[1] = d_cy * kCenterVariance * anc.height();
        g[2] = off[2] * kSizeVariance < max_log_scale() ? d_w * pred.width() * kSizeVariance : 0.0;
        g[3] = off[3] * kSizeVariance < max_log_scale() ? d_h * pred.height() * kSizeVariance : 0.0;
      } else {
        s += smooth_l1(off, m.target[a], &g);
      }
      if (dbox) {
        T* gd = dbox->data() + (n * A + a) * 4;
        for (int k = 0; k < 4; ++k) gd[k] = static_cast<T>(a_w * g[k] / divisor);
      }
    }
    loc_sum[n] = s;
  }

  for (int n = 0; n < batch; ++n) {
    out.classification += cls_sum[n];
    out.localization += loc_sum[n];
  }
  out.total = (out.classification + a_w * out.localization) / divisor;
  return out;
}

template LossBreakdown detection_loss<float>(const Tensor<float>&, const Tensor<float>&,
                                             const LossTargets&, const ModelConfig&,
                                             Tensor<float>*, Tensor<float>*);
template LossBreakdown detection_loss<double>(const Tensor<double>&, const Tensor<double>&,
                                              const LossTargets&, const ModelConfig&,
                                              Tensor<double>*, Tensor<double>*);

}  // namespace mdn
