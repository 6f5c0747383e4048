#ifndef INSIDER_SYNTH_H_
#define INSIDER_SYNTH_H_

#include <cstdint>
#include <iosfwd>

namespace insider {

enum class AnomalyMode {
  // Anomalies are triples over hosts the user never touches otherwise.
  kOffSupport,
  // Anomalies are in-vocabulary events the chain never transitions to from
  // the current state (harder to separate).
  kRareTransition,
};

// Synthetic authentication traffic: each user walks a sparse first-order
// Markov chain over `vocab_per_user` event triples. The top successor of
// every state follows one random cycle through all states, so every event
// appears; `transition_concentration` sets how much mass that top successor
// gets (rank r has weight exp(-concentration * r)).
struct SynthSpec {
  std::size_t users = 1;
  std::size_t events_per_user = 20000;
  std::size_t vocab_per_user = 50;
  double transition_concentration = 3.0;
  std::size_t branching = 4;
  double anomaly_rate = 0.001;
  std::size_t anomaly_vocab = 20;
  // Mean number of consecutive anomalous events per incident (geometric).
  // Incidents start at rate anomaly_rate / anomaly_burst, so the expected
  // share of anomalous events stays close to anomaly_rate.
  double anomaly_burst = 1.0;
  AnomalyMode mode = AnomalyMode::kOffSupport;
  std::uint64_t seed = 0;

  // Throws DataError on out-of-range values.
  void validate() const;
};

struct SynthCounts {
  std::uint64_t auth_rows = 0;
  std::uint64_t red_team_rows = 0;
};

// Streams a 4-field auth log (all users merged in time order) and the
// matching red-team file. Memory is bounded by users x vocabulary; output is
// a pure function of the spec. User u is "U<u>".
SynthCounts generate(const SynthSpec& spec, std::ostream& auth, std::ostream& red_team);

}  // namespace insider

#endif  // INSIDER_SYNTH_H_
