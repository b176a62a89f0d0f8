"""Loss terms of the perturbation game.

All functions accept tensors (differentiable) or array-likes and return a scalar
tensor. Probabilities are clamped to ``[PROB_EPS, 1 - PROB_EPS]`` before logs, so
every term is finite; e.g. the discriminator loss bottoms out near ``2 * log(1e-7)``.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F

PROB_EPS = 1e-7
_LOG_MIN = math.log(PROB_EPS)
_LOG_MAX = math.log1p(-PROB_EPS)


def _t(x, dtype=torch.float64):
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=dtype)


def _clamp(p):
    return p.clamp(PROB_EPS, 1 - PROB_EPS)


def discriminator_loss(d_fake, d_real):
    """``mean(log D(G(x))) + mean(log(1 - D(x)))``; the discriminator minimises it."""
    d_fake, d_real = _clamp(_t(d_fake)), _clamp(_t(d_real))
    return torch.log(d_fake).mean() + torch.log1p(-d_real).mean()


def gan_generator_loss(d_fake):
    """``mean(log(1 - D(G(x))))``; minimised as the discriminator is fooled."""
    return torch.log1p(-_clamp(_t(d_fake))).mean()


def clamped_cross_entropy(log_probs, labels):
    """Per-record ``-log p[y]`` with ``p`` clamped like every other probability."""
    labels = _t(labels, torch.int64).long()
    picked = log_probs.gather(1, labels.view(-1, 1)).squeeze(1)
    return -picked.clamp(_LOG_MIN, _LOG_MAX)


def cross_entropy_from_probs(probs, labels):
    return clamped_cross_entropy(torch.log(_clamp(_t(probs))), labels).mean()


def cross_entropy_from_logits(logits, labels):
    return clamped_cross_entropy(F.log_softmax(logits, dim=1), labels).mean()


def _log_sigmoid_st(logits):
    """``log(sigmoid(z))`` valued with clamped probabilities, differentiated unclamped.

    The forward value matches the probability-clamped definition exactly while
    the gradient never vanishes at saturation (a saturated discriminator would
    otherwise stop learning for good).
    """
    raw = F.logsigmoid(logits)
    return raw + (raw.clamp(_LOG_MIN, _LOG_MAX) - raw).detach()


def discriminator_loss_from_logits(fake_logits, real_logits):
    """:func:`discriminator_loss` evaluated from pre-sigmoid discriminator outputs."""
    return _log_sigmoid_st(fake_logits).mean() + _log_sigmoid_st(-real_logits).mean()


def gan_generator_loss_from_logits(fake_logits):
    return _log_sigmoid_st(-fake_logits).mean()


def discriminator_surrogate_from_logits(fake_logits, real_logits):
    """Binary cross-entropy form ``-log(1 - D(G(x))) - log D(x)``.

    Same optimal discriminator as :func:`discriminator_loss` but with strong
    gradients where the discriminator is wrong; used for the update step.
    """
    return -F.logsigmoid(-fake_logits).mean() - F.logsigmoid(real_logits).mean()


def gan_generator_surrogate_from_logits(fake_logits):
    """Non-saturating generator term ``-log D(G(x))``; shares its optimum with L_GAN."""
    return -F.logsigmoid(fake_logits).mean()


def adversarial_loss(p_target, y_target, p_sensitive, y_sensitive, lam):
    """``mean(CE(target) - lam * CE(sensitive))`` on class-probability rows."""
    return cross_entropy_from_probs(p_target, y_target) - lam * cross_entropy_from_probs(p_sensitive, y_sensitive)


def adversarial_loss_from_logits(target_logits, y_target, sensitive_logits, y_sensitive, lam):
    """Same value as :func:`adversarial_loss`, computed stably from logits.

    Either side may be ``None`` (ablations); its term is then dropped.
    """
    total = 0.0
    if target_logits is not None:
        total = total + cross_entropy_from_logits(target_logits, y_target)
    if sensitive_logits is not None:
        total = total - lam * cross_entropy_from_logits(sensitive_logits, y_sensitive)
    return _t(total)


def perturbation_norm(x_perturbed, x_original):
    """Euclidean norm of ``G(x) - x`` per record, over the flattened features."""
    diff = (_t(x_perturbed) - _t(x_original)).flatten(1)
    # sqrt(0) has an infinite derivative; the hinge is flat there anyway
    sq = (diff * diff).sum(1)
    return torch.where(sq > 0, sq.clamp_min(1e-30).sqrt(), torch.zeros_like(sq))


def hinge_loss(x_perturbed, x_original, c):
    """``mean(max(0, ||G(x) - x|| - c))``."""
    return F.relu(perturbation_norm(x_perturbed, x_original) - c).mean()


def generator_total_loss(gan_term, adv_term, hinge_term, alpha, beta):
    """``L_GAN + alpha * L_Adv + beta * L_hinge``."""
    return _t(gan_term) + alpha * _t(adv_term) + beta * _t(hinge_term)
