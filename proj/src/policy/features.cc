#include "pikl/policy/features.h"

#include <algorithm>
#include <cmath>

#include "pikl/errors.h"

namespace pikl::policy {

using hanabi::Card;
using hanabi::CardCounts;
using hanabi::CardKnowledge;
using hanabi::Observation;

std::vector<float> FeatureVector::Flat() const {
  std::vector<float> out;
  out.reserve(public_block.size() + private_block.size() + lambda_block.size());
  out.insert(out.end(), public_block.begin(), public_block.end());
  out.insert(out.end(), private_block.begin(), private_block.end());
  out.insert(out.end(), lambda_block.begin(), lambda_block.end());
  return out;
}

FeatureEncoder::FeatureEncoder(const hanabi::GameConfig& config,
                               std::vector<double> lambda_vocabulary)
    : config_(config), vocabulary_(std::move(lambda_vocabulary)) {
  config_.Validate();
  const int c = config_.colors;
  const int r = config_.NumRanks();
  const int t = config_.NumCardTypes();
  const int h = config_.hand_size;
  deck_after_deal_ = config_.DeckSize() - hanabi::kNumPlayers * h;
  public_size_ = c * (r + 1) + (config_.max_hint_tokens + 1) + (config_.max_lives + 1) +
                 deck_after_deal_ + 4 + config_.DeckSize() + 2 * h * (1 + c + r + 2) +
                 (1 + 1 + 4 + config_.NumActions() + t + 1 + 1 + h) + 1;
  private_size_ = h * t + 3 * h + 3 * h;
}

int FeatureEncoder::LambdaIndex(double lambda) const {
  for (size_t i = 0; i < vocabulary_.size(); ++i) {
    if (std::abs(vocabulary_[i] - lambda) < 1e-9) return static_cast<int>(i);
  }
  throw UsageError("lambda condition " + std::to_string(lambda) + " is not in the vocabulary");
}

FeatureVector FeatureEncoder::Encode(const Observation& obs, std::optional<double> lambda) const {
  std::vector<float> flat(size());
  EncodeInto(obs, lambda, flat);
  FeatureVector v;
  v.public_block.assign(flat.begin(), flat.begin() + public_size_);
  v.private_block.assign(flat.begin() + public_size_, flat.begin() + public_size_ + private_size_);
  v.lambda_block.assign(flat.begin() + public_size_ + private_size_, flat.end());
  return v;
}

void FeatureEncoder::EncodeInto(const Observation& obs, std::optional<double> lambda,
                                std::span<float> out) const {
  std::fill(out.begin(), out.end(), 0.0f);
  int lambda_slot = -1;
  if (lambda) lambda_slot = LambdaIndex(*lambda);
  EncodePublic(obs, out.subspan(0, public_size_));
  EncodePrivate(obs, out.subspan(public_size_, private_size_));
  if (lambda_slot >= 0) out[public_size_ + private_size_ + lambda_slot] = 1.0f;
}

void FeatureEncoder::EncodePublic(const Observation& obs, std::span<float> out) const {
  const int c_n = config_.colors;
  const int r_n = config_.NumRanks();
  const int h = config_.hand_size;
  int o = 0;
  for (int c = 0; c < c_n; ++c) {
    out[o + obs.fireworks[c]] = 1.0f;
    o += r_n + 1;
  }
  out[o + obs.hint_tokens] = 1.0f;
  o += config_.max_hint_tokens + 1;
  out[o + obs.lives] = 1.0f;
  o += config_.max_lives + 1;
  for (int i = 0; i < std::min(obs.deck_size, deck_after_deal_); ++i) out[o + i] = 1.0f;
  o += deck_after_deal_;
  out[o + std::clamp(obs.final_turns_remaining + 1, 0, 3)] = 1.0f;
  o += 4;
  for (int c = 0; c < c_n; ++c) {
    for (int r = 0; r < r_n; ++r) {
      const int n = config_.rank_counts[r];
      const int d = obs.discards[c * r_n + r];
      for (int i = 0; i < d && i < n; ++i) out[o + i] = 1.0f;
      o += n;
    }
  }
  for (const auto* know : {&obs.own_knowledge, &obs.partner_knowledge}) {
    for (int s = 0; s < h; ++s) {
      if (s < static_cast<int>(know->size())) {
        const CardKnowledge& k = (*know)[s];
        out[o] = 1.0f;
        for (int c = 0; c < c_n; ++c) out[o + 1 + c] = static_cast<float>((k.colors >> c) & 1u);
        for (int r = 0; r < r_n; ++r) {
          out[o + 1 + c_n + r] = static_cast<float>((k.ranks >> r) & 1u);
        }
        out[o + 1 + c_n + r_n] = k.color_hinted ? 1.0f : 0.0f;
        out[o + 2 + c_n + r_n] = k.rank_hinted ? 1.0f : 0.0f;
      }
      o += 1 + c_n + r_n + 2;
    }
  }
  if (!obs.last_move) {
    out[o] = 1.0f;
  } else {
    const hanabi::MoveInfo& m = *obs.last_move;
    out[o + 1] = m.player == obs.observer ? 1.0f : 0.0f;
    out[o + 2 + static_cast<int>(m.action.type)] = 1.0f;
    out[o + 6 + m.action.ToIndex(config_)] = 1.0f;
    const int base = o + 6 + config_.NumActions();
    if (m.revealed.valid()) out[base + m.revealed.Index(r_n)] = 1.0f;
    out[base + config_.NumCardTypes()] = m.success ? 1.0f : 0.0f;
    out[base + config_.NumCardTypes() + 1] = m.drew ? 1.0f : 0.0f;
    for (int s = 0; s < h; ++s) {
      out[base + config_.NumCardTypes() + 2 + s] = static_cast<float>((m.hinted_slots >> s) & 1u);
    }
  }
  o += 1 + 1 + 4 + config_.NumActions() + config_.NumCardTypes() + 1 + 1 + h;
  out[o] = obs.my_turn() ? 1.0f : 0.0f;
}

void FeatureEncoder::EncodePrivate(const Observation& obs, std::span<float> out) const {
  const int h = config_.hand_size;
  const int t_n = config_.NumCardTypes();
  const int r_n = config_.NumRanks();
  int o = 0;
  for (int s = 0; s < h; ++s) {
    if (s < static_cast<int>(obs.partner_hand.size())) {
      out[o + obs.partner_hand[s].Index(r_n)] = 1.0f;
    }
    o += t_n;
  }
  for (int s = 0; s < h; ++s) {
    if (s < static_cast<int>(obs.partner_hand.size())) {
      const Card c = obs.partner_hand[s];
      out[o] = obs.fireworks[c.color] == c.rank ? 1.0f : 0.0f;
      out[o + 1] = hanabi::IsDead(obs, c) ? 1.0f : 0.0f;
      out[o + 2] = IsCritical(obs, c) ? 1.0f : 0.0f;
    }
    o += 3;
  }
  const CardCounts unseen = hanabi::UnseenCounts(obs);
  for (int s = 0; s < h; ++s) {
    if (s < obs.own_hand_size()) {
      const SlotEstimate e = EstimateSlot(obs, unseen, obs.own_knowledge[s]);
      out[o] = static_cast<float>(e.playable);
      out[o + 1] = static_cast<float>(e.dead);
      out[o + 2] = static_cast<float>(e.critical);
    }
    o += 3;
  }
}

bool IsCritical(const Observation& obs, Card c) {
  if (hanabi::IsDead(obs, c)) return false;
  const int r_n = obs.config->NumRanks();
  return obs.config->rank_counts[c.rank] - obs.discards[c.Index(r_n)] == 1;
}

SlotEstimate EstimateSlot(const Observation& obs, const CardCounts& counts,
                          const CardKnowledge& knowledge) {
  const hanabi::GameConfig& cfg = *obs.config;
  const int r_n = cfg.NumRanks();
  double total = 0.0;
  SlotEstimate e;
  for (int t = 0; t < cfg.NumCardTypes(); ++t) {
    if (counts[t] == 0) continue;
    const Card c = Card::FromIndex(t, r_n);
    if (!knowledge.Allows(c)) continue;
    const double w = counts[t];
    total += w;
    if (obs.fireworks[c.color] == c.rank) e.playable += w;
    if (hanabi::IsDead(obs, c)) {
      e.dead += w;
    } else if (IsCritical(obs, c)) {
      e.critical += w;
    }
  }
  if (total > 0.0) {
    e.playable /= total;
    e.dead /= total;
    e.critical /= total;
  }
  return e;
}

}  // namespace pikl::policy
