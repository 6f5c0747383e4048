#include "insider/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "insider/error.h"
#include "insider/random.h"

namespace insider {
namespace {

// Normal traffic uses hosts below this id, anomalies at or above it.
constexpr std::uint32_t kAnomalyHostBase = 1'000'000;

struct Triple {
  std::uint32_t src;
  std::uint32_t dst;
};

class UserChain {
 public:
  UserChain(const SynthSpec& spec, std::uint32_t user)
      : spec_(spec), user_(user), rng_(Rng::stream(spec.seed, user)) {
    const std::size_t v = spec.vocab_per_user;
    const std::uint32_t host_pool = static_cast<std::uint32_t>(std::max<std::size_t>(8, 4 * v));
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    while (events_.size() < v) {
      const auto src = 1 + static_cast<std::uint32_t>(rng_.below(host_pool));
      const auto dst = 1 + static_cast<std::uint32_t>(rng_.below(host_pool));
      if (seen.insert({src, dst}).second) events_.push_back({src, dst});
    }
    for (std::size_t a = 0; a < spec.anomaly_vocab; ++a) {
      anomalies_.push_back({kAnomalyHostBase + static_cast<std::uint32_t>(rng_.below(1000)),
                            kAnomalyHostBase + static_cast<std::uint32_t>(rng_.below(1000))});
    }

    // Random cycle for the top successor, then distinct extra successors.
    std::vector<std::size_t> cycle(v);
    for (std::size_t i = 0; i < v; ++i) cycle[i] = i;
    rng_.shuffle(std::span(cycle));
    successors_.resize(v);
    for (std::size_t i = 0; i < v; ++i) {
      auto& row = successors_[cycle[i]];
      row.push_back(cycle[(i + 1) % v]);
      const std::size_t width = std::min(spec.branching, v);
      while (row.size() < width) {
        const std::size_t s = rng_.below(v);
        if (std::find(row.begin(), row.end(), s) == row.end()) row.push_back(s);
      }
    }
    double total = 0;
    for (std::size_t r = 0; r < std::min(spec.branching, v); ++r) {
      weights_.push_back(std::exp(-spec.transition_concentration * static_cast<double>(r)));
      total += weights_.back();
    }
    for (double& w : weights_) w /= total;

    state_ = rng_.below(v);
    seconds_ = static_cast<std::int64_t>(rng_.below(60));
  }

  bool done() const { return emitted_ >= spec_.events_per_user; }
  std::int64_t seconds() const { return seconds_; }
  std::uint32_t user() const { return user_; }

  // Emits the current event and advances.
  void emit(std::ostream& auth, std::ostream& red_team, SynthCounts& counts) {
    Triple t;
    bool anomalous = false;
    if (burst_remaining_ > 0) {
      --burst_remaining_;
      anomalous = true;
    } else if (rng_.bernoulli(spec_.anomaly_rate / spec_.anomaly_burst)) {
      anomalous = true;
      // Geometric length with mean anomaly_burst.
      const double stop = 1.0 / spec_.anomaly_burst;
      while (!rng_.bernoulli(stop)) ++burst_remaining_;
    }

    if (anomalous && spec_.mode == AnomalyMode::kOffSupport && !anomalies_.empty()) {
      // The chain holds its state while the intruder acts.
      t = anomalies_[rng_.below(anomalies_.size())];
    } else if (anomalous && spec_.mode == AnomalyMode::kRareTransition &&
               successors_[state_].size() < spec_.vocab_per_user) {
      std::size_t s;
      do {
        s = rng_.below(spec_.vocab_per_user);
      } while (std::find(successors_[state_].begin(), successors_[state_].end(), s) !=
               successors_[state_].end());
      state_ = s;
      t = events_[state_];
    } else {
      anomalous = false;
      t = events_[state_];
      state_ = next_state();
    }

    char line[64];
    const int n = std::snprintf(line, sizeof line, "%lld,U%u,C%u,C%u\n",
                                static_cast<long long>(seconds_), user_, t.src, t.dst);
    auth.write(line, n);
    ++counts.auth_rows;
    if (anomalous) {
      red_team.write(line, n);
      ++counts.red_team_rows;
    }
    ++emitted_;
    seconds_ += 1 + static_cast<std::int64_t>(rng_.below(120));
  }

 private:
  std::size_t next_state() {
    const auto& row = successors_[state_];
    double u = rng_.uniform();
    for (std::size_t r = 0; r + 1 < row.size(); ++r) {
      if (u < weights_[r]) return row[r];
      u -= weights_[r];
    }
    return row.back();
  }

  const SynthSpec& spec_;
  std::uint32_t user_;
  Rng rng_;
  std::vector<Triple> events_;
  std::vector<Triple> anomalies_;
  std::vector<std::vector<std::size_t>> successors_;
  std::vector<double> weights_;
  std::size_t state_ = 0;
  std::int64_t seconds_ = 0;
  std::size_t emitted_ = 0;
  std::size_t burst_remaining_ = 0;
};

}  // namespace

void SynthSpec::validate() const {
  if (vocab_per_user < 2) throw DataError("synthetic vocabulary must have at least 2 events");
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 0.1)) {
    throw DataError("anomaly rate must lie in [0, 0.1]");
  }
  if (!(anomaly_burst >= 1.0)) throw DataError("anomaly burst length must be at least 1");
  if (!(transition_concentration >= 0.0)) throw DataError("concentration must be non-negative");
  if (branching < 1) throw DataError("branching must be at least 1");
  if (anomaly_rate > 0.0 && mode == AnomalyMode::kOffSupport && anomaly_vocab < 1) {
    throw DataError("anomaly vocabulary must be non-empty");
  }
}

SynthCounts generate(const SynthSpec& spec, std::ostream& auth, std::ostream& red_team) {
  spec.validate();
  std::vector<UserChain> chains;
  chains.reserve(spec.users);
  for (std::size_t u = 0; u < spec.users; ++u) {
    chains.emplace_back(spec, static_cast<std::uint32_t>(u));
  }
  // Merge users by (time, user id).
  using Key = std::tuple<std::int64_t, std::uint32_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> next;
  for (const auto& c : chains) {
    if (!c.done()) next.emplace(c.seconds(), c.user());
  }
  SynthCounts counts;
  while (!next.empty()) {
    const auto [seconds, user] = next.top();
    next.pop();
    auto& chain = chains[user];
    chain.emit(auth, red_team, counts);
    if (!chain.done()) next.emplace(chain.seconds(), chain.user());
  }
  if (!auth || !red_team) throw IoError("failed writing synthetic logs");
  return counts;
}

}  // namespace insider
