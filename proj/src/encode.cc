#include "insider/encode.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "insider/error.h"

namespace insider {

std::string to_string(const EventKey& key) {
  return to_string(key.user) + "," + to_string(key.src) + "," + to_string(key.dst);
}

EventIndex EventDictionary::observe(const EventKey& key) {
  auto [it, inserted] = index_.try_emplace(key, static_cast<EventIndex>(keys_.size()));
  if (inserted) {
    keys_.push_back(key);
    frequency_.push_back(0);
  }
  ++frequency_[it->second];
  return it->second;
}

EventIndex EventDictionary::index_of(const EventKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) {
    throw DataError("event " + to_string(key) + " is not in the dictionary");
  }
  return it->second;
}

const EventKey& EventDictionary::key_of(EventIndex index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= keys_.size()) {
    throw DataError("event index " + std::to_string(index) + " out of range for vocabulary " +
                    std::to_string(keys_.size()));
  }
  return keys_[index];
}

std::uint64_t EventDictionary::frequency(EventIndex index) const {
  key_of(index);
  return frequency_[index];
}

std::string EventDictionary::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    mix(static_cast<std::uint32_t>(i));
    mix(keys_[i].user.value);
    mix(keys_[i].src.value);
    mix(keys_[i].dst.value);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EventDictionary EventDictionary::from_entries(std::span<const Entry> entries) {
  std::vector<Entry> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });
  EventDictionary dict;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].index != static_cast<EventIndex>(i)) {
      throw FormatError("dictionary indices must be 0..n-1 without gaps");
    }
    if (!dict.index_.try_emplace(sorted[i].key, sorted[i].index).second) {
      throw FormatError("dictionary lists " + to_string(sorted[i].key) + " twice");
    }
    dict.keys_.push_back(sorted[i].key);
    dict.frequency_.push_back(sorted[i].frequency);
  }
  return dict;
}

EventDictionary build_dictionary(std::span<const AuthEvent> events) {
  EventDictionary dict;
  for (const auto& e : events) dict.observe(key_of_event(e));
  return dict;
}

EncodedSequence encode_sequence(std::span<const AuthEvent> events, const EventDictionary& dict) {
  EncodedSequence seq;
  if (!events.empty()) seq.user = events.front().user;
  seq.indices.reserve(events.size());
  seq.labels.reserve(events.size());
  seq.timestamps.reserve(events.size());
  for (const auto& e : events) {
    seq.indices.push_back(dict.index_of(key_of_event(e)));
    seq.labels.push_back(e.is_red_team);
    seq.timestamps.push_back(e.timestamp);
  }
  return seq;
}

VocabReport vocab_report(const EventDictionary& dict) {
  const auto freq = dict.frequencies();
  return {dict.size(), freq.empty() ? 0 : *std::max_element(freq.begin(), freq.end())};
}

void write_dictionary_json(std::ostream& out, const EventDictionary& dict) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const auto& key = dict.key_of(static_cast<EventIndex>(i));
    entries.push_back({{"index", i},
                       {"user", to_string(key.user)},
                       {"src", to_string(key.src)},
                       {"dst", to_string(key.dst)},
                       {"frequency", dict.frequency(static_cast<EventIndex>(i))}});
  }
  out << entries.dump(1) << '\n';
}

EventDictionary read_dictionary_json(std::istream& in) {
  nlohmann::json entries;
  try {
    entries = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary file: ") + e.what());
  }
  if (!entries.is_array()) throw FormatError("dictionary file must hold a JSON array");
  std::vector<EventDictionary::Entry> parsed;
  parsed.reserve(entries.size());
  try {
    for (const auto& e : entries) {
      auto user = parse_user_id(e.at("user").get<std::string>());
      auto src = parse_host_id(e.at("src").get<std::string>());
      auto dst = parse_host_id(e.at("dst").get<std::string>());
      if (!user || !src || !dst) throw FormatError("dictionary entry has malformed identifiers");
      parsed.push_back({e.at("index").get<EventIndex>(), EventKey{*user, *src, *dst},
                        e.at("frequency").get<std::uint64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dictionary file: ") + e.what());
  }
  return EventDictionary::from_entries(parsed);
}

void write_encoded_csv(std::ostream& out, const EncodedSequence& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out << format_iso8601(seq.timestamps[i]) << ',' << seq.indices[i] << ','
        << (seq.labels[i] ? 1 : 0) << '\n';
  }
}

EncodedSequence read_encoded_csv(std::istream& in, UserId user) {
  EncodedSequence seq;
  seq.user = user;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    EventIndex index = -1;
    auto parse_index = [&] {
      const char* last = line.data() + c2;
      return std::from_chars(line.data() + c1 + 1, last, index).ptr == last;
    };
    if (c2 == std::string::npos || !parse_index() || index < 0 ||
        (line.substr(c2 + 1) != "0" && line.substr(c2 + 1) != "1")) {
      throw FormatError("encoded file line " + std::to_string(line_no) + ": malformed '" + line +
                        "'");
    }
    seq.timestamps.push_back(parse_iso8601(std::string_view(line).substr(0, c1)));
    seq.indices.push_back(index);
    seq.labels.push_back(line.substr(c2 + 1) == "1");
  }
  if (in.bad()) throw IoError("read error while loading encoded sequence");
  return seq;
}

}  // namespace insider
