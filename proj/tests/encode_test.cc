#include <sstream>
#include <vector>

#include "doctest.h"
#include "insider/encode.h"
#include "insider/error.h"

using insider::AuthEvent;
using insider::EventKey;
using insider::HostId;
using insider::UserId;

namespace {

AuthEvent ev(std::int64_t s, std::uint32_t src, std::uint32_t dst, bool red = false) {
  return insider::assign_absolute_time(
      insider::RawRecord{s, UserId{5080}, HostId{src}, HostId{dst}}, insider::kDefaultBaseDate, red);
}

}  // namespace

TEST_CASE("a repeated event shares one index") {
  // Same triple at 10am and 11am.
  const std::vector<AuthEvent> events{ev(36000, 23, 24), ev(36500, 23, 25), ev(37000, 1, 2),
                                      ev(38000, 9, 24), ev(39600, 23, 25)};
  const auto dict = insider::build_dictionary(events);
  CHECK(dict.size() == 4);
  const auto repeated = dict.index_of(insider::key_of_event(events[1]));
  CHECK(repeated == 1);
  CHECK(dict.frequency(repeated) == 2);
  CHECK(insider::vocab_report(dict) == insider::VocabReport{4, 2});
}

TEST_CASE("dictionary edge cases") {
  CHECK(insider::build_dictionary({}).size() == 0);
  CHECK(insider::vocab_report(insider::build_dictionary({})) == insider::VocabReport{0, 0});

  const std::vector<AuthEvent> same(19, ev(1, 3, 4));
  const auto dict = insider::build_dictionary(same);
  CHECK(dict.size() == 1);
  CHECK(dict.frequency(0) == 19);
}

TEST_CASE("encode_sequence maps events to indices and keeps labels") {
  const std::vector<AuthEvent> events{ev(1, 1, 2), ev(2, 3, 4, true), ev(3, 1, 2)};
  const auto dict = insider::build_dictionary(events);
  const auto seq = insider::encode_sequence(events, dict);
  CHECK(seq.indices == std::vector<insider::EventIndex>{0, 1, 0});
  CHECK(seq.labels == std::vector<bool>{false, true, false});
  CHECK(seq.user == UserId{5080});
  CHECK(insider::encode_sequence({}, dict).size() == 0);

  try {
    insider::encode_sequence(std::vector<AuthEvent>{ev(1, 7, 7)}, dict);
    FAIL("expected DataError");
  } catch (const insider::DataError& e) {
    CHECK(std::string(e.what()).find("U5080,C7,C7") != std::string::npos);
  }
}

TEST_CASE("decode after encode is the identity and frequencies are conserved") {
  std::vector<AuthEvent> events;
  for (int i = 0; i < 500; ++i) events.push_back(ev(i, 1 + (i * 7) % 13, 1 + (i * 3) % 5));
  const auto dict = insider::build_dictionary(events);
  const auto seq = insider::encode_sequence(events, dict);
  std::vector<std::uint64_t> counts(dict.size(), 0);
  for (auto idx : seq.indices) ++counts[static_cast<std::size_t>(idx)];
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const auto idx = static_cast<insider::EventIndex>(i);
    CHECK(dict.index_of(dict.key_of(idx)) == idx);
    CHECK(dict.frequency(idx) == counts[i]);
  }
  CHECK(insider::build_dictionary(events) == dict);
  CHECK(insider::build_dictionary(events).checksum() == dict.checksum());
}

TEST_CASE("dictionary JSON and encoded CSV round trip") {
  const std::vector<AuthEvent> events{ev(1, 1, 2), ev(2, 3, 4, true), ev(3, 1, 2)};
  const auto dict = insider::build_dictionary(events);
  std::stringstream json;
  insider::write_dictionary_json(json, dict);
  const auto back = insider::read_dictionary_json(json);
  CHECK(back == dict);
  CHECK(back.checksum() == dict.checksum());

  const auto seq = insider::encode_sequence(events, dict);
  std::stringstream csv;
  insider::write_encoded_csv(csv, seq);
  CHECK(csv.str().substr(0, 25) == "2018-01-01T00:00:01Z,0,0\n");
  const auto again = insider::read_encoded_csv(csv, UserId{5080});
  CHECK(again.indices == seq.indices);
  CHECK(again.labels == seq.labels);
  CHECK(again.timestamps == seq.timestamps);

  std::istringstream broken("[{\"index\": 1, \"user\": \"U1\", \"src\": \"C1\", \"dst\": \"C2\", "
                            "\"frequency\": 1}]");
  CHECK_THROWS_AS(insider::read_dictionary_json(broken), insider::Error);
}

TEST_CASE("checksum distinguishes dictionaries") {
  const auto a = insider::build_dictionary(std::vector<AuthEvent>{ev(1, 1, 2), ev(2, 3, 4)});
  const auto b = insider::build_dictionary(std::vector<AuthEvent>{ev(1, 3, 4), ev(2, 1, 2)});
  CHECK(a.checksum() != b.checksum());
}
