#ifndef INSIDER_ENCODE_H_
#define INSIDER_ENCODE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "insider/ingest.h"

namespace insider {

using EventIndex = std::int32_t;

// One authentication behaviour: who went from where to where.
struct EventKey {
  UserId user;
  HostId src;
  HostId dst;
  auto operator<=>(const EventKey&) const = default;
};

std::string to_string(const EventKey& key);

inline EventKey key_of_event(const AuthEvent& e) { return EventKey{e.user, e.src, e.dst}; }

// Bijection between the distinct events of one user and 0..size-1, assigned
// in order of first appearance.
class EventDictionary {
 public:
  EventDictionary() = default;

  // Appends `key` if unseen; bumps its frequency either way.
  EventIndex observe(const EventKey& key);

  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  // Throws DataError naming the key if it is not in the dictionary.
  EventIndex index_of(const EventKey& key) const;
  bool contains(const EventKey& key) const { return index_.contains(key); }
  const EventKey& key_of(EventIndex index) const;
  std::uint64_t frequency(EventIndex index) const;
  std::span<const std::uint64_t> frequencies() const { return frequency_; }

  // FNV-1a over the canonical (index, key) listing; pairs a model with the
  // dictionary it was trained against.
  std::string checksum() const;

  // Restores a dictionary from explicit entries, which must be indexed
  // 0..n-1 without gaps or duplicate keys.
  struct Entry {
    EventIndex index;
    EventKey key;
    std::uint64_t frequency;
  };
  static EventDictionary from_entries(std::span<const Entry> entries);

  bool operator==(const EventDictionary& other) const {
    return keys_ == other.keys_ && frequency_ == other.frequency_;
  }

 private:
  std::map<EventKey, EventIndex> index_;
  std::vector<EventKey> keys_;
  std::vector<std::uint64_t> frequency_;
};

struct EncodedSequence {
  UserId user;
  std::vector<EventIndex> indices;
  std::vector<bool> labels;
  std::vector<Timestamp> timestamps;

  std::size_t size() const { return indices.size(); }
};

EventDictionary build_dictionary(std::span<const AuthEvent> events);

EncodedSequence encode_sequence(std::span<const AuthEvent> events, const EventDictionary& dict);

struct VocabReport {
  std::size_t vocabulary_size = 0;
  std::uint64_t highest_event_frequency = 0;
  bool operator==(const VocabReport&) const = default;
};

VocabReport vocab_report(const EventDictionary& dict);

// <user>.dict.json: [{index, user, src, dst, frequency}, ...] sorted by index.
void write_dictionary_json(std::ostream& out, const EventDictionary& dict);
EventDictionary read_dictionary_json(std::istream& in);

// <user>.encoded.csv: iso8601_timestamp,index,is_red_team
void write_encoded_csv(std::ostream& out, const EncodedSequence& seq);
EncodedSequence read_encoded_csv(std::istream& in, UserId user);

}  // namespace insider

#endif  // INSIDER_ENCODE_H_
