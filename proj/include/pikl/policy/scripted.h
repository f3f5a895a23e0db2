#ifndef PIKL_POLICY_SCRIPTED_H_
#define PIKL_POLICY_SCRIPTED_H_

#include <string>

#include "pikl/policy/policy.h"

namespace pikl::policy {

enum class Skill { kWeak, kMedium, kStrong };

std::string SkillName(Skill s);
Skill SkillFromName(const std::string& name);  // throws ConfigError

// Rule-based stand-in for a human player. With probability `noise` it picks
// a uniformly random legal action instead of the rule's choice, so its
// distribution is (1 - noise) * onehot(rule) + noise * uniform(legal).
//
// Rules never look at color indices when breaking ties, so the policy is
// equivariant under color relabeling.
class ScriptedPolicy : public Policy {
 public:
  ScriptedPolicy(const hanabi::GameConfig& config, Skill skill, double noise);

  std::string Name() const override;
  const hanabi::GameConfig& config() const override { return config_; }
  ActionProbs Probs(AohView aoh, std::optional<double> lambda) const override;

  Skill skill() const { return skill_; }
  double noise() const { return noise_; }

  // The noiseless rule. Always legal for obs.
  hanabi::Action RuleAction(const Observation& obs) const;

 private:
  hanabi::GameConfig config_;
  Skill skill_;
  double noise_;
};

}  // namespace pikl::policy

#endif  // PIKL_POLICY_SCRIPTED_H_
