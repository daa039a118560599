#include "novo/losses.hpp"

#include <algorithm>
#include <cmath>

namespace novo {

namespace {

double sigmoid(double s) {
    if (s >= 0.0) {
        return 1.0 / (1.0 + std::exp(-s));
    }
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

} // namespace

void TokenSequence::validate() const {
    if (length < 1 || vocab < 1) {
        throw ShapeError("TokenSequence: length and vocab must be >= 1");
    }
    if (logits.size() != static_cast<std::size_t>(length) * static_cast<std::size_t>(vocab) ||
        targets.size() != static_cast<std::size_t>(length)) {
        throw ShapeError("TokenSequence: buffer sizes do not match length x vocab");
    }
    for (int t : targets) {
        if (t != kIgnoreIndex && (t < 0 || t >= vocab)) {
            throw ValueError("TokenSequence: target id " + std::to_string(t) + " outside [0, " +
                             std::to_string(vocab) + ")");
        }
    }
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw ValueError("TokenSequence: non-finite logit");
        }
    }
}

LossGrad ce_loss(const TokenSequence& seq) {
    seq.validate();
    const auto counted = std::count_if(seq.targets.begin(), seq.targets.end(),
                                       [](int t) { return t != TokenSequence::kIgnoreIndex; });
    if (counted == 0) {
        throw ValueError("ce_loss: every target is ignored");
    }
    const double inv = 1.0 / static_cast<double>(counted);
    const auto V = static_cast<std::size_t>(seq.vocab);
    LossGrad out{0.0, std::vector<double>(seq.logits.size(), 0.0)};
    for (std::size_t t = 0; t < static_cast<std::size_t>(seq.length); ++t) {
        const int target = seq.targets[t];
        if (target == TokenSequence::kIgnoreIndex) {
            continue;
        }
        const double* row = seq.logits.data() + t * V;
        const double peak = *std::max_element(row, row + V);
        double z = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            z += std::exp(row[v] - peak);
        }
        const double log_z = peak + std::log(z);
        out.value += (log_z - row[target]) * inv;
        double* g = out.grad.data() + t * V;
        for (std::size_t v = 0; v < V; ++v) {
            g[v] = std::exp(row[v] - log_z) * inv;
        }
        g[target] -= inv;
    }
    return out;
}

LossGrad bce_loss(const DenseMap& logits, const BinaryMask& target) {
    require_same_shape(logits, target, "bce_loss");
    const double inv = 1.0 / static_cast<double>(logits.size());
    LossGrad out{0.0, std::vector<double>(logits.size(), 0.0)};
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double s = logits[k];
        const double t = target[k] ? 1.0 : 0.0;
        // −[t log σ(s) + (1−t) log(1−σ(s))] = softplus(s) − t·s
        out.value += (softplus(s) - t * s) * inv;
        out.grad[k] = (sigmoid(s) - t) * inv;
    }
    return out;
}

LossGrad dice_loss(const DenseMap& logits, const BinaryMask& target, double eps) {
    require_same_shape(logits, target, "dice_loss");
    if (!(eps > 0.0)) {
        throw ValueError("dice_loss: eps must be positive");
    }
    std::vector<double> p(logits.size());
    double inter = 0.0;
    double p_sum = 0.0;
    double t_sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = sigmoid(logits[k]);
        const double t = target[k] ? 1.0 : 0.0;
        inter += p[k] * t;
        p_sum += p[k];
        t_sum += t;
    }
    const double num = 2.0 * inter + eps;
    const double den = p_sum + t_sum + eps;
    LossGrad out{1.0 - num / den, std::vector<double>(logits.size(), 0.0)};
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double t = target[k] ? 1.0 : 0.0;
        // d/dp of −num/den, chained through dσ/ds = p(1−p).
        const double d_dp = -(2.0 * t * den - num) / (den * den);
        out.grad[k] = d_dp * p[k] * (1.0 - p[k]);
    }
    return out;
}

double combine_losses(double ce, double bce, double dice, const LossWeights& w) {
    return w.lambda_ce * ce + w.lambda_bce * bce + w.lambda_dice * dice;
}

TotalLoss total_loss(const TokenSequence& seq, const DenseMap& mask_logits, const BinaryMask& target,
                     const LossWeights& w, double dice_eps) {
    if (w.lambda_ce < 0.0 || w.lambda_bce < 0.0 || w.lambda_dice < 0.0) {
        throw ValueError("total_loss: loss weights must be non-negative");
    }
    const DenseMap resized = (mask_logits.height() == target.height() && mask_logits.width() == target.width())
                                 ? mask_logits
                                 : bilinear_resize(mask_logits, target.height(), target.width());
    TotalLoss out;
    out.ce = ce_loss(seq).value;
    out.bce = bce_loss(resized, target).value;
    out.dice = dice_loss(resized, target, dice_eps).value;
    out.total = combine_losses(out.ce, out.bce, out.dice, w);
    return out;
}

} // namespace novo
