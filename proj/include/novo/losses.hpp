#pragma once

#include "novo/tensor.hpp"

#include <vector>

namespace novo {

struct LossWeights {
    double lambda_ce = 1.0;
    double lambda_bce = 2.0;
    double lambda_dice = 0.5;
};

/// Token logits (T×V, row-major) with target ids; kIgnoreIndex skips a position.
struct TokenSequence {
    static constexpr int kIgnoreIndex = -100;

    int length = 0;
    int vocab = 0;
    std::vector<double> logits;
    std::vector<int> targets;

    /// Throws ShapeError / ValueError on malformed input.
    void validate() const;
};

/// Loss value and its gradient with respect to the logits (same layout).
struct LossGrad {
    double value = 0.0;
    std::vector<double> grad;
};

/// Mean token cross-entropy over non-ignored positions. Throws ValueError when
/// every target is ignored.
LossGrad ce_loss(const TokenSequence& seq);

/// Mean per-pixel binary cross-entropy on logits (log-sum-exp stabilised).
LossGrad bce_loss(const DenseMap& logits, const BinaryMask& target);

/// Soft Dice on sigmoid probabilities: 1 − (2Σpt + eps)/(Σp + Σt + eps).
LossGrad dice_loss(const DenseMap& logits, const BinaryMask& target, double eps = 1.0);

struct TotalLoss {
    double ce = 0.0;
    double bce = 0.0;
    double dice = 0.0;
    double total = 0.0;
};

/// Weighted sum of the three terms from already-computed component values.
double combine_losses(double ce, double bce, double dice, const LossWeights& w);

/// Text + mask objective. Mask logits whose shape differs from the target are
/// bilinearly resized to the target resolution first.
TotalLoss total_loss(const TokenSequence& seq, const DenseMap& mask_logits, const BinaryMask& target,
                     const LossWeights& w = {}, double dice_eps = 1.0);

} // namespace novo
