#include "pikl/policy/scripted.h"

#include <bit>
#include <cstdio>

#include "pikl/errors.h"
#include "pikl/policy/features.h"

namespace pikl::policy {

using hanabi::Action;
using hanabi::Card;
using hanabi::CardKnowledge;

std::string SkillName(Skill s) {
  switch (s) {
    case Skill::kWeak: return "weak";
    case Skill::kMedium: return "medium";
    case Skill::kStrong: return "strong";
  }
  return "?";
}

Skill SkillFromName(const std::string& name) {
  if (name == "weak") return Skill::kWeak;
  if (name == "medium") return Skill::kMedium;
  if (name == "strong") return Skill::kStrong;
  throw ConfigError("unknown skill level '" + name + "' (expected weak, medium or strong)");
}

ScriptedPolicy::ScriptedPolicy(const hanabi::GameConfig& config, Skill skill, double noise)
    : config_(config), skill_(skill), noise_(noise) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("scripted noise must be in [0, 1]");
}

std::string ScriptedPolicy::Name() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "scripted-%s-%.3g", SkillName(skill_).c_str(), noise_);
  return buf;
}

namespace {

bool Legal(const Observation& obs, Action a) {
  return (obs.legal_mask >> a.ToIndex(*obs.config)) & 1ULL;
}

uint8_t Touches(const std::vector<Card>& hand, Action hint) {
  uint8_t m = 0;
  for (size_t s = 0; s < hand.size(); ++s) {
    const bool hit = hint.type == Action::Type::kHintColor ? hand[s].color == hint.value
                                                           : hand[s].rank == hint.value;
    if (hit) m |= static_cast<uint8_t>(1u << s);
  }
  return m;
}

int Focus(uint8_t touched) { return touched == 0 ? -1 : 7 - std::countl_zero(touched); }

// Partner's slot knowledge after receiving `hint`.
CardKnowledge KnowledgeAfter(const CardKnowledge& k, Action hint, bool touched) {
  CardKnowledge out = k;
  if (hint.type == Action::Type::kHintColor) {
    const uint8_t bit = static_cast<uint8_t>(1u << hint.value);
    out.colors = touched ? (out.colors & bit) : (out.colors & ~bit);
    out.color_hinted |= touched;
  } else {
    const uint8_t bit = static_cast<uint8_t>(1u << hint.value);
    out.ranks = touched ? (out.ranks & bit) : (out.ranks & ~bit);
    out.rank_hinted |= touched;
  }
  return out;
}

// Upper bound on the partner's P(playable) for a slot: public counts are a
// superset of what the partner cannot see.
double PublicPlayable(const Observation& obs, const CardKnowledge& k) {
  return EstimateSlot(obs, hanabi::PublicRemainingCounts(obs), k).playable;
}

bool Playable(const Observation& obs, Card c) { return obs.fireworks[c.color] == c.rank; }

}  // namespace

Action ScriptedPolicy::RuleAction(const Observation& obs) const {
  const int n_own = obs.own_hand_size();
  const auto& partner = obs.partner_hand;
  const int n_partner = static_cast<int>(partner.size());
  const hanabi::CardCounts unseen = hanabi::UnseenCounts(obs);
  std::vector<SlotEstimate> est(n_own);
  for (int s = 0; s < n_own; ++s) est[s] = EstimateSlot(obs, unseen, obs.own_knowledge[s]);

  auto pick = [&](Action a) -> std::optional<Action> {
    if (Legal(obs, a)) return a;
    return std::nullopt;
  };

  // A hint is safe if the partner reading its focus as "play" cannot bomb.
  auto safe_hint = [&](Action h) {
    const uint8_t t = Touches(partner, h);
    const int f = Focus(t);
    if (f < 0) return false;
    if (Playable(obs, partner[f])) return true;
    return PublicPlayable(obs, KnowledgeAfter(obs.partner_knowledge[f], h, true)) == 0.0;
  };

  // 1. Play a card known to be playable.
  for (int s = 0; s < n_own; ++s) {
    if (est[s].playable >= 1.0 - 1e-12) {
      if (auto a = pick(Action::Play(s))) return *a;
    }
  }

  // 2. Focus convention: the newest card touched by the partner's last hint.
  if (skill_ != Skill::kWeak && obs.last_move && obs.last_move->player == obs.partner() &&
      obs.last_move->action.IsHint()) {
    const int f = Focus(obs.last_move->hinted_slots);
    if (f >= 0 && f < n_own && est[f].playable > 0.0) {
      const bool cautious = skill_ == Skill::kStrong && obs.lives <= 1 && est[f].playable < 0.5;
      if (!cautious) {
        if (auto a = pick(Action::Play(f))) return *a;
      }
    }
  }

  // 3. Hint a playable partner card, lowest rank first, then oldest.
  if (obs.hint_tokens > 0) {
    for (int r = 0; r < config_.NumRanks(); ++r) {
      for (int s = 0; s < n_partner; ++s) {
        const Card c = partner[s];
        if (c.rank != r || !Playable(obs, c)) continue;
        if (PublicPlayable(obs, obs.partner_knowledge[s]) >= 1.0 - 1e-12) continue;
        if (skill_ == Skill::kWeak) {
          if (obs.partner_knowledge[s].rank_hinted) continue;
          if (auto a = pick(Action::HintRank(c.rank))) return *a;
          continue;
        }
        for (Action h : {Action::HintRank(c.rank), Action::HintColor(c.color)}) {
          if (Focus(Touches(partner, h)) == s) {
            if (auto a = pick(h)) return *a;
          }
        }
      }
    }
  }

  // 4. Strong: save a critical card on the partner's chop with a safe hint.
  if (skill_ == Skill::kStrong && obs.hint_tokens > 0) {
    int chop = -1;
    for (int s = 0; s < n_partner; ++s) {
      if (!obs.partner_knowledge[s].Clued()) {
        chop = s;
        break;
      }
    }
    if (chop >= 0 && IsCritical(obs, partner[chop])) {
      const Action h = Action::HintRank(partner[chop].rank);
      if (Touches(partner, h) == (1u << chop) && safe_hint(h)) {
        if (auto a = pick(h)) return *a;
      }
    }
  }

  // 5. Discard.
  if (Legal(obs, Action::Discard(0))) {
    if (skill_ == Skill::kStrong) {
      for (int s = 0; s < n_own; ++s) {
        if (est[s].dead >= 1.0 - 1e-12) return Action::Discard(s);
      }
    }
    for (int s = 0; s < n_own; ++s) {
      if (!obs.own_knowledge[s].Clued()) return Action::Discard(s);
    }
    return Action::Discard(0);
  }

  // 6. Tokens are full and discarding is not allowed: spend a hint.
  if (n_partner > 0) {
    if (skill_ == Skill::kStrong) {
      for (int s = n_partner - 1; s >= 0; --s) {
        for (Action h : {Action::HintRank(partner[s].rank), Action::HintColor(partner[s].color)}) {
          if (Focus(Touches(partner, h)) == s && safe_hint(h)) {
            if (auto a = pick(h)) return *a;
          }
        }
      }
    }
    if (auto a = pick(Action::HintRank(partner[n_partner - 1].rank))) return *a;
  }

  // 7. Best guess at a playable card.
  int best = -1;
  for (int s = 0; s < n_own; ++s) {
    if (!Legal(obs, Action::Play(s))) continue;
    if (best < 0 || est[s].playable > est[best].playable) best = s;
  }
  if (best >= 0) return Action::Play(best);
  for (int i = 0; i < config_.NumActions(); ++i) {
    if ((obs.legal_mask >> i) & 1ULL) return Action::FromIndex(config_, i);
  }
  throw UsageError("scripted policy asked to act with no legal actions");
}

ActionProbs ScriptedPolicy::Probs(AohView aoh, std::optional<double>) const {
  const Observation& obs = aoh.back();
  ActionProbs p = UniformOverMask(config_.NumActions(), obs.legal_mask);
  for (double& x : p) x *= noise_;
  if (noise_ < 1.0) p[RuleAction(obs).ToIndex(config_)] += 1.0 - noise_;
  return p;
}

}  // namespace pikl::policy
