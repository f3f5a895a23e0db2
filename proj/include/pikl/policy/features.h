#ifndef PIKL_POLICY_FEATURES_H_
#define PIKL_POLICY_FEATURES_H_

#include <optional>
#include <span>
#include <vector>

#include "pikl/hanabi/observation.h"

namespace pikl::policy {

inline constexpr int kEncoderSchemaVersion = 1;

// Encoded observation. The public block depends only on information both
// seats share; the private block holds what only the observer can see (the
// partner's cards and statistics derived from them).
struct FeatureVector {
  std::vector<float> public_block;
  std::vector<float> private_block;
  std::vector<float> lambda_block;

  std::vector<float> Flat() const;
  bool operator==(const FeatureVector&) const = default;
};

// Fixed-length encoder for one config and one λ vocabulary.
//
// Public block, in order:
//   fireworks        C x (R+1) one-hot
//   hint tokens      (K+1) one-hot
//   lives            (L+1) one-hot
//   deck size        thermometer, one unit per card left after the deal
//   final turns      one-hot over {none, 0, 1, 2}
//   discards         per card type, thermometer over its copy count
//   knowledge        own then partner slots: occupied, color bits, rank
//                    bits, color-hinted, rank-hinted
//   last move        none, actor-is-me, type (4), canonical index, revealed
//                    card, success, drew, hinted slots
//   my turn          1
// Private block:
//   partner hand     H x T one-hot
//   partner flags    H x {playable, dead, critical}
//   own estimates    H x {P(playable), P(dead), P(critical)} under the
//                    observer's unseen-card counts and slot knowledge
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const hanabi::GameConfig& config, std::vector<double> lambda_vocabulary);

  int public_size() const { return public_size_; }
  int private_size() const { return private_size_; }
  int lambda_size() const { return static_cast<int>(vocabulary_.size()); }
  int size() const { return public_size_ + private_size_ + lambda_size(); }
  const std::vector<double>& vocabulary() const { return vocabulary_; }

  // Index of `lambda` in the vocabulary. Throws UsageError if absent.
  int LambdaIndex(double lambda) const;

  // Throws UsageError if `lambda` is given but not in the vocabulary.
  FeatureVector Encode(const hanabi::Observation& obs, std::optional<double> lambda) const;
  // Writes the concatenated blocks into `out` (size() floats).
  void EncodeInto(const hanabi::Observation& obs, std::optional<double> lambda,
                  std::span<float> out) const;

 private:
  void EncodePublic(const hanabi::Observation& obs, std::span<float> out) const;
  void EncodePrivate(const hanabi::Observation& obs, std::span<float> out) const;

  hanabi::GameConfig config_;
  std::vector<double> vocabulary_;
  int deck_after_deal_ = 0;
  int public_size_ = 0;
  int private_size_ = 0;
};

// Per-slot probabilities from the observer's counts: slot s may hold card
// type t with weight unseen[t] when its knowledge allows t.
struct SlotEstimate {
  double playable = 0.0;
  double dead = 0.0;
  double critical = 0.0;
};
SlotEstimate EstimateSlot(const hanabi::Observation& obs, const hanabi::CardCounts& counts,
                          const hanabi::CardKnowledge& knowledge);

// Last remaining live copy of its type.
bool IsCritical(const hanabi::Observation& obs, hanabi::Card c);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_FEATURES_H_
